"""
Binary terminal discriminators and the values they induce.

With a reward that is zero everywhere except r_T ∈ {0, 1}, V(s) is the chance
the finished sequence is accepted and Q(s, a) the same chance after taking a.
Both are computed exactly by backward induction over the bounded token tree,
or estimated by Monte Carlo rollouts.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Any,
    Callable,
    Dict,
    FrozenSet,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

from .config import config, logger
from .core import (
    DecodeState,
    PolicySpec,
    Termination,
    TokenDist,
    Vocab,
    legal_actions,
    strip_evidence,
)
from .errors import (
    InvalidConfiguration,
    InvariantViolation,
    MissingGuidanceInput,
    NonTerminalSequence,
    StateSpaceTooLarge,
)
from .models.base import LanguageModel
from .policies import GuidanceInputs, episode_rng, guided_distribution

Suffix = Tuple[int, ...]
StepPolicy = Callable[[DecodeState, Tuple[int, ...]], TokenDist]
BELLMAN_TOLERANCE = 1e-9


class RuleKind(Enum):
    """Acceptance criteria for finished sequences."""
    CONTAINS_TOKEN = "contains_token"
    CONTAINS_ANY = "contains_any"
    SEQUENCE_IN_SET = "sequence_in_set"


@dataclass(frozen=True)
class DiscriminatorRule:
    """
    Deterministic binary discriminator D over finished output sequences.

    Attributes:
        kind: Acceptance criterion
        tokens: Token indices for the containment rules
        sequences: Accepted full sequences (eos included) for SEQUENCE_IN_SET
    """
    kind: RuleKind
    tokens: FrozenSet[int] = frozenset()
    sequences: FrozenSet[Suffix] = frozenset()

    def __post_init__(self):
        kind = RuleKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'tokens', frozenset(int(t) for t in self.tokens))
        object.__setattr__(
            self, 'sequences', frozenset(tuple(int(t) for t in s) for s in self.sequences)
        )
        if kind is RuleKind.CONTAINS_TOKEN and len(self.tokens) != 1:
            raise InvalidConfiguration("contains_token takes exactly one token")
        if kind is RuleKind.CONTAINS_ANY and not self.tokens:
            raise InvalidConfiguration("contains_any needs at least one token")
        if kind is RuleKind.SEQUENCE_IN_SET and not self.sequences:
            raise InvalidConfiguration("sequence_in_set needs at least one sequence")

    @classmethod
    def contains_token(cls, token: int) -> DiscriminatorRule:
        return cls(RuleKind.CONTAINS_TOKEN, tokens=frozenset([token]))

    @classmethod
    def contains_any(cls, tokens: Sequence[int]) -> DiscriminatorRule:
        return cls(RuleKind.CONTAINS_ANY, tokens=frozenset(tokens))

    @classmethod
    def sequence_in_set(cls, sequences: Sequence[Sequence[int]]) -> DiscriminatorRule:
        return cls(RuleKind.SEQUENCE_IN_SET, sequences=frozenset(tuple(s) for s in sequences))

    def accepts(self, sequence: Suffix) -> bool:
        if self.kind is RuleKind.SEQUENCE_IN_SET:
            return tuple(sequence) in self.sequences
        return not self.tokens.isdisjoint(sequence)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], vocab: Vocab) -> DiscriminatorRule:
        """
        Parse the scenario-file form ``{"kind": ..., "tokens": ...}``.

        ``tokens`` is a token string or list of strings for the containment
        rules, and a list of token-string lists for ``sequence_in_set``.
        """
        try:
            kind = RuleKind(data['kind'])
            raw = data['tokens']
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfiguration(f"Bad discriminator rule: {exc}") from None
        if kind is RuleKind.SEQUENCE_IN_SET:
            if not isinstance(raw, list) or not all(isinstance(s, list) for s in raw):
                raise InvalidConfiguration("sequence_in_set tokens must be a list of lists")
            return cls.sequence_in_set([vocab.encode(s) for s in raw])
        names = [raw] if isinstance(raw, str) else list(raw)
        return cls(kind, tokens=frozenset(vocab.encode(names)))

    def to_dict(self, vocab: Vocab) -> Dict[str, Any]:
        if self.kind is RuleKind.SEQUENCE_IN_SET:
            tokens: Any = sorted(vocab.decode(s) for s in self.sequences)
        else:
            tokens = vocab.decode(sorted(self.tokens))
        return {'kind': self.kind.value, 'tokens': tokens}


def discriminate(rule: DiscriminatorRule, sequence: Sequence[int], eos_index: int) -> int:
    """
    Terminal reward r_T for a finished output sequence.

    Raises:
        NonTerminalSequence: If the sequence does not end with eos
    """
    sequence = tuple(sequence)
    if not sequence or sequence[-1] != eos_index:
        raise NonTerminalSequence(f"Sequence {sequence} does not end with eos")
    return int(rule.accepts(sequence))


@dataclass(frozen=True, eq=False)
class ValueTables:
    """
    Exact V(s) and Q(s, ·) for every reachable non-terminal state.

    States are keyed by their generated suffix; prompt and evidence are fixed
    per table. Q and the rollout distributions are indexed by position in the
    state's legal-action tuple.

    Attributes:
        v: suffix -> V(s)
        q: suffix -> Q(s, a) over legal actions
        legal: suffix -> legal actions
        rollout: suffix -> ρ(·|s) over legal actions
        horizon: T_max
        termination: Termination mode the tables were built under
        rollout_spec: None for ℙ_G rollouts, else the guided policy followed
    """
    v: Dict[Suffix, float]
    q: Dict[Suffix, np.ndarray]
    legal: Dict[Suffix, Tuple[int, ...]]
    rollout: Dict[Suffix, TokenDist]
    horizon: int
    termination: Termination = Termination.FREE
    rollout_spec: Optional[PolicySpec] = None
    evidence_id: Optional[str] = None
    prompt: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def policy_used(self) -> str:
        if self.rollout_spec is None:
            return "base"
        return f"optimal({self.rollout_spec.kind.value})"

    @property
    def root_value(self) -> float:
        return self.v[()]

    def value(self, suffix: Sequence[int]) -> float:
        return self.v[tuple(suffix)]

    def action_values(self, suffix: Sequence[int]) -> np.ndarray:
        return self.q[tuple(suffix)]

    def q_value(self, suffix: Sequence[int], action: int) -> float:
        suffix = tuple(suffix)
        return float(self.q[suffix][self.legal[suffix].index(action)])

    def q_over_v(self, suffix: Sequence[int]) -> np.ndarray:
        """Q(s, a)/V(s) over legal actions, floored as in GuidanceInputs."""
        suffix = tuple(suffix)
        q = self.q[suffix]
        value = self.v[suffix]
        if value <= 0.0:
            return np.ones_like(q)
        return np.maximum(q, config.q_floor) / value

    def __len__(self) -> int:
        return len(self.v)


def _nonterminal_suffixes(vocab: Vocab, depth: int) -> Iterator[Suffix]:
    content = [i for i in range(vocab.size) if i != vocab.eos_index]
    return itertools.product(content, repeat=depth)


def check_state_space(vocab_size: int, horizon: int) -> None:
    """
    Raises:
        StateSpaceTooLarge: If |vocab|^horizon exceeds the enumeration budget
    """
    if horizon < 1:
        raise InvalidConfiguration(f"horizon must be >= 1, got {horizon}")
    if horizon * math.log(vocab_size) > math.log(config.max_enumeration) + 1e-12:
        raise StateSpaceTooLarge(
            f"|vocab|^horizon = {vocab_size}^{horizon} exceeds {config.max_enumeration}"
        )


def guidance_inputs(
    lm: LanguageModel,
    state: DecodeState,
    legal: Tuple[int, ...],
    needs_uncond: bool = True,
    tables: Optional[ValueTables] = None
) -> GuidanceInputs:
    """
    Per-step policy inputs restricted to the legal actions.

    Q is attached when ``tables`` is given; the tables must have been built for
    the state's prompt and evidence. V is Σ_a ℙ_G(a|s) Q(s, a)
    as in backward induction, so over optimal tables the step policy equals
    ``tables.rollout``.
    """
    p_cond = lm.next_dist(state).restrict(legal)
    p_uncond = lm.next_dist(strip_evidence(state)).restrict(legal) if needs_uncond else None
    if tables is None:
        return GuidanceInputs(p_cond=p_cond, p_uncond=p_uncond)
    suffix = state.generated
    return GuidanceInputs.from_values(p_cond, tables.action_values(suffix), p_uncond=p_uncond)


def base_step_policy(lm: LanguageModel) -> StepPolicy:
    """ρ = ℙ_G restricted to the legal actions."""
    def step(state: DecodeState, legal: Tuple[int, ...]) -> TokenDist:
        return lm.next_dist(state).restrict(legal)
    return step


def make_step_policy(
    lm: LanguageModel,
    spec: PolicySpec,
    tables: Optional[ValueTables] = None
) -> StepPolicy:
    """
    Guided policy as a function of state and legal actions.

    Raises:
        MissingGuidanceInput: If the spec needs Q values and no tables are given
    """
    if spec.needs_values and tables is None:
        raise MissingGuidanceInput(f"{spec.kind.value} needs value tables")

    def step(state: DecodeState, legal: Tuple[int, ...]) -> TokenDist:
        if len(legal) == 1:
            return TokenDist(np.zeros(1))
        inputs = guidance_inputs(lm, state, legal, spec.needs_uncond, tables)
        return guided_distribution(spec, inputs)
    return step


def backward_induction(
    lm: LanguageModel,
    rule: DiscriminatorRule,
    evidence_id: Optional[str],
    prompt: Sequence[int],
    horizon: int,
    rollout: Optional[PolicySpec] = None,
    termination: Termination = Termination.FREE
) -> ValueTables:
    """
    Exact values by backward recursion over the token tree.

    At the last decision step Q(s, eos) = D(s ∪ eos); earlier,
    Q(s, a) = V(s ∪ a) and V(s) = Σ_a ρ(a|s) Q(s, a). With ``rollout=None`` ρ is
    ℙ_G; otherwise ρ is the closed-form guided policy of ``rollout``, computed
    from the already finished later stages.

    Args:
        lm: Generative model
        rule: Terminal discriminator
        evidence_id: Evidence the states carry
        prompt: Prompt token indices
        horizon: T_max; the episode ends with eos by step horizon-1
        rollout: Policy followed after the current step, None for ℙ_G
        termination: When eos may be emitted

    Returns:
        ValueTables for every reachable non-terminal state

    Raises:
        StateSpaceTooLarge: If |vocab|^horizon exceeds the enumeration budget
    """
    vocab = lm.vocab
    check_state_space(vocab.size, horizon)
    termination = Termination(termination)
    prompt = tuple(prompt)
    eos = vocab.eos_index
    v: Dict[Suffix, float] = {}
    q: Dict[Suffix, np.ndarray] = {}
    legal_by_suffix: Dict[Suffix, Tuple[int, ...]] = {}
    rollouts: Dict[Suffix, TokenDist] = {}

    for depth in range(horizon - 1, -1, -1):
        legal = legal_actions(vocab.size, eos, depth, horizon, termination)
        for suffix in _nonterminal_suffixes(vocab, depth):
            q_row = np.array([
                float(rule.accepts(suffix + (a,))) if a == eos else v[suffix + (a,)]
                for a in legal
            ])
            q_row.setflags(write=False)
            if len(legal) == 1:
                rho = TokenDist(np.zeros(1))
            else:
                state = DecodeState(prompt, suffix, eos, evidence_id)
                if rollout is None:
                    rho = lm.next_dist(state).restrict(legal)
                else:
                    p_cond = lm.next_dist(state).restrict(legal)
                    p_uncond = None
                    if rollout.needs_uncond:
                        p_uncond = lm.next_dist(strip_evidence(state)).restrict(legal)
                    inputs = GuidanceInputs.from_values(p_cond, q_row, p_uncond=p_uncond)
                    rho = guided_distribution(rollout, inputs)
            probs = rho.probs
            value = float(np.dot(probs, q_row))
            check = math.fsum(p * x for p, x in zip(probs, q_row))
            if abs(value - check) > BELLMAN_TOLERANCE or not -1e-12 <= value <= 1.0 + 1e-9:
                raise InvariantViolation(f"Bellman check failed at {suffix}: {value} vs {check}")
            v[suffix] = min(max(value, 0.0), 1.0)
            q[suffix] = q_row
            legal_by_suffix[suffix] = legal
            rollouts[suffix] = rho

    tables = ValueTables(
        v=v, q=q, legal=legal_by_suffix, rollout=rollouts, horizon=horizon,
        termination=termination, rollout_spec=rollout, evidence_id=evidence_id, prompt=prompt,
    )
    logger.info(
        f"Built {tables.policy_used} value tables: {len(v)} states, "
        f"horizon {horizon}, V(root)={tables.root_value:.6f}"
    )
    return tables


def enumerate_values(
    lm: LanguageModel,
    rule: DiscriminatorRule,
    evidence_id: Optional[str],
    prompt: Sequence[int],
    horizon: int,
    step_policy: Optional[StepPolicy] = None,
    termination: Termination = Termination.FREE,
    generated: Sequence[int] = ()
) -> float:
    """
    V(s) by summing rollout probability × D over every finished sequence.

    The state s is the root by default; ``generated`` starts the sum from the
    state that has already produced those tokens, which gives Q(s, a) as the
    value of s ∪ a.

    Shares no code with :func:`backward_induction` beyond the model and rule,
    so agreement between the two is a real check.
    """
    vocab = lm.vocab
    check_state_space(vocab.size, horizon)
    termination = Termination(termination)
    policy = step_policy or base_step_policy(lm)
    eos = vocab.eos_index
    prompt = tuple(prompt)
    generated = tuple(generated)
    if generated and generated[-1] == eos:
        return float(rule.accepts(generated))
    start = len(generated)
    content = [i for i in range(vocab.size) if i != eos]
    lengths = [horizon] if termination is Termination.AT_HORIZON else range(1, horizon + 1)

    total = 0.0
    for length in lengths:
        if length <= start:
            continue
        for body in itertools.product(content, repeat=length - 1 - start):
            sequence = generated + body + (eos,)
            if not rule.accepts(sequence):
                continue
            prob = 1.0
            for depth in range(start, length):
                action = sequence[depth]
                legal = legal_actions(vocab.size, eos, depth, horizon, termination)
                state = DecodeState(prompt, sequence[:depth], eos, evidence_id)
                prob *= float(policy(state, legal).probs[legal.index(action)])
                if prob == 0.0:
                    break
            total += prob
    return total


def rollout_estimate(
    step_policy: StepPolicy,
    lm: LanguageModel,
    rule: DiscriminatorRule,
    state: DecodeState,
    horizon: int,
    n_samples: int,
    seed: int,
    termination: Termination = Termination.FREE
) -> Tuple[float, float]:
    """
    Monte Carlo estimate of V_π(s) with its standard error.

    Rollout i draws from its own counter-based stream keyed on ``seed + i``, so
    a batch split across workers reproduces the single-worker estimate.
    Next-token CDFs are cached per suffix.

    Returns:
        (mean, stderr) with stderr = sample std / √n, 0 for n = 1
    """
    if n_samples < 1:
        raise InvalidConfiguration(f"n_samples must be >= 1, got {n_samples}")
    termination = Termination(termination)
    vocab = lm.vocab
    eos = vocab.eos_index
    if state.is_terminal:
        reward = float(discriminate(rule, state.generated, eos))
        return reward, 0.0

    steps = max(horizon - state.depth, 1)
    cdfs: Dict[Suffix, Tuple[Tuple[int, ...], List[float], float]] = {}
    rewards = np.empty(n_samples)
    for i in range(n_samples):
        suffix = state.generated
        row = episode_rng(seed + i).random(steps).tolist()
        t = 0
        while not suffix or suffix[-1] != eos:
            entry = cdfs.get(suffix)
            if entry is None:
                current = DecodeState(state.prompt, suffix, eos, state.evidence_id)
                legal = legal_actions(vocab.size, eos, current.depth, horizon, termination)
                cdf = np.cumsum(step_policy(current, legal).probs)
                entry = (legal, cdf.tolist(), float(cdf[-1]))
                cdfs[suffix] = entry
            legal, cdf_list, total = entry
            index = min(bisect.bisect_right(cdf_list, row[t] * total), len(legal) - 1)
            suffix = suffix + (legal[index],)
            t += 1
        rewards[i] = discriminate(rule, suffix, eos)

    mean = float(rewards.mean())
    stderr = float(rewards.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    logger.debug(f"Rollout estimate from depth {state.depth}: {mean:.6f} ± {stderr:.6f}")
    return mean, stderr


__all__ = [
    'RuleKind',
    'DiscriminatorRule',
    'discriminate',
    'ValueTables',
    'StepPolicy',
    'check_state_space',
    'guidance_inputs',
    'base_step_policy',
    'make_step_policy',
    'backward_induction',
    'enumerate_values',
    'rollout_estimate',
]
