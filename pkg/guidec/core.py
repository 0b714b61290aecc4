"""
Core domain types: vocabularies, token distributions, decoding states,
episode traces and policy specifications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AdvancePastTerminal,
    DimensionMismatch,
    GuidecError,
    InvalidConfiguration,
    NegativeLambda,
    NonFiniteInput,
    NonPositiveTemperature,
    UnknownParameter,
)

MAX_VOCAB = 64
SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Vocab:
    """
    Ordered set of symbol strings with a designated end-of-sequence token.

    Token indices, not strings, are what every other module works with; the
    vocabulary owns the mapping in both directions.
    """
    tokens: Tuple[str, ...]
    eos_index: int

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, 'tokens', tokens)
        if not 2 <= len(tokens) <= MAX_VOCAB:
            raise InvalidConfiguration(
                f"Vocabulary size must be in [2, {MAX_VOCAB}], got {len(tokens)}"
            )
        if any(not isinstance(t, str) or not t for t in tokens):
            raise InvalidConfiguration("Vocabulary tokens must be nonempty strings")
        if len(set(tokens)) != len(tokens):
            raise InvalidConfiguration("Vocabulary tokens must be unique")
        if not 0 <= self.eos_index < len(tokens):
            raise InvalidConfiguration(f"eos_index {self.eos_index} out of range")

    @classmethod
    def from_tokens(cls, tokens: Sequence[str], eos: str) -> Vocab:
        """Build a vocabulary, locating ``eos`` among ``tokens``."""
        tokens = tuple(tokens)
        if eos not in tokens:
            raise InvalidConfiguration(f"eos token {eos!r} not in vocabulary")
        return cls(tokens, tokens.index(eos))

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def eos(self) -> str:
        return self.tokens[self.eos_index]

    def __len__(self) -> int:
        return len(self.tokens)

    def index(self, token: str) -> int:
        """Index of a token string."""
        try:
            return self.tokens.index(token)
        except ValueError:
            raise InvalidConfiguration(f"Unknown token {token!r}") from None

    def encode(self, tokens: Iterable[str]) -> Tuple[int, ...]:
        return tuple(self.index(t) for t in tokens)

    def decode(self, indices: Iterable[int]) -> List[str]:
        return [self.tokens[i] for i in indices]


@dataclass(frozen=True, eq=False)
class TokenDist:
    """
    Probability vector over the vocabulary, stored as natural-log probabilities.

    Entries may be -inf only where the distribution puts exactly zero mass
    (greedy outputs, restricted action sets); model outputs are always finite.

    Attributes:
        log_probs: Read-only float64 vector of log-probabilities
    """
    log_probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.log_probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidConfiguration("TokenDist needs a nonempty 1-D vector")
        if np.isnan(arr).any() or np.isposinf(arr).any():
            raise NonFiniteInput("TokenDist log-probabilities must not be NaN or +inf")
        total = float(np.exp(arr).sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise InvalidConfiguration(
                f"TokenDist probabilities sum to {total!r}, expected 1"
            )
        arr.setflags(write=False)
        object.__setattr__(self, 'log_probs', arr)

    @classmethod
    def from_probs(cls, probs: Sequence[float]) -> TokenDist:
        """Build from a probability vector; zero entries become -inf."""
        p = np.asarray(probs, dtype=np.float64)
        if (p < 0).any():
            raise InvalidConfiguration("Probabilities must be nonnegative")
        with np.errstate(divide='ignore'):
            return cls(np.log(p))

    @classmethod
    def uniform(cls, n: int) -> TokenDist:
        return cls(np.full(n, -math.log(n)))

    @classmethod
    def one_hot(cls, n: int, index: int) -> TokenDist:
        log_probs = np.full(n, -np.inf)
        log_probs[index] = 0.0
        return cls(log_probs)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    @property
    def size(self) -> int:
        return int(self.log_probs.size)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        shown = ", ".join(f"{p:.4f}" for p in self.probs[:8])
        more = ", ..." if self.size > 8 else ""
        return f"TokenDist([{shown}{more}])"

    def argmax(self) -> int:
        """Index of the most probable token; ties go to the lowest index."""
        return int(np.argmax(self.log_probs))

    def allclose(self, other: TokenDist, atol: float = 1e-12) -> bool:
        if self.size != other.size:
            return False
        return bool(np.allclose(self.probs, other.probs, rtol=0.0, atol=atol))

    def restrict(self, indices: Sequence[int]) -> TokenDist:
        """
        Condition on a subset of tokens: select and renormalize.

        The result is indexed by position in ``indices``, not by vocabulary index.
        """
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == self.size and np.array_equal(idx, np.arange(self.size)):
            return self
        selected = self.log_probs[idx]
        if not np.isfinite(selected).any():
            raise InvalidConfiguration("Restriction has no mass on the selected tokens")
        return TokenDist(selected - logsumexp(selected))

    def expand(self, indices: Sequence[int], size: int) -> TokenDist:
        """Inverse of :meth:`restrict`: place mass back on vocabulary indices."""
        if len(indices) != self.size:
            raise DimensionMismatch(
                f"expand got {len(indices)} indices for a distribution of size {self.size}"
            )
        log_probs = np.full(size, -np.inf)
        log_probs[np.asarray(indices, dtype=np.int64)] = self.log_probs
        return TokenDist(log_probs)


@dataclass(frozen=True)
class DecodeState:
    """
    Decoding state s_t: optional evidence, prompt and the partial output.

    Attributes:
        prompt: Prompt token indices x
        generated: Output tokens produced so far, y_<t
        eos_index: Vocabulary index of the end-of-sequence token
        evidence_id: Opaque id of the conditioning evidence; None for s⁻
    """
    prompt: Tuple[int, ...]
    generated: Tuple[int, ...]
    eos_index: int
    evidence_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'prompt', tuple(int(t) for t in self.prompt))
        object.__setattr__(self, 'generated', tuple(int(t) for t in self.generated))
        if self.eos_index in self.generated[:-1]:
            raise InvalidConfiguration("generated contains tokens after eos")

    @property
    def is_terminal(self) -> bool:
        return bool(self.generated) and self.generated[-1] == self.eos_index

    @property
    def depth(self) -> int:
        return len(self.generated)

    @property
    def context(self) -> Tuple[int, ...]:
        return self.prompt + self.generated


def strip_evidence(state: DecodeState) -> DecodeState:
    """Return the evidence-free view s⁻ with prompt and output untouched."""
    if state.evidence_id is None:
        return state
    return replace(state, evidence_id=None)


def advance(state: DecodeState, action: int) -> DecodeState:
    """
    Deterministic transition s' = s ∪ a.

    Raises:
        AdvancePastTerminal: If the state already ends with eos
    """
    if state.is_terminal:
        raise AdvancePastTerminal(f"State already terminated: {state.generated}")
    return replace(state, generated=state.generated + (int(action),))


class Termination(Enum):
    """When the end-of-sequence token may be emitted."""
    FREE = "free"
    AT_HORIZON = "at_horizon"


def legal_actions(
    vocab_size: int,
    eos_index: int,
    depth: int,
    horizon: int,
    termination: Termination = Termination.FREE
) -> Tuple[int, ...]:
    """
    Actions available after ``depth`` generated tokens.

    At depth horizon-1 only eos is legal (forced termination); under
    AT_HORIZON eos is illegal before that step.
    """
    if depth >= horizon - 1:
        return (eos_index,)
    if termination is Termination.AT_HORIZON:
        return tuple(i for i in range(vocab_size) if i != eos_index)
    return tuple(range(vocab_size))


@dataclass(frozen=True)
class EpisodeStep:
    """One (s_t, a_t, π(·|s_t), r_{t+1}) record of a decoded episode."""
    state: DecodeState
    action: int
    policy: TokenDist
    reward: int
    legal_actions: Tuple[int, ...]
    forced: bool = False


@dataclass(frozen=True)
class EpisodeTrace:
    """
    A fully decoded episode.

    Attributes:
        steps: Step records in decoding order
        terminal_reward: r_T from the discriminator
        horizon: T_max the episode was decoded under
        final_state: s_T, kept for completeness; no decision is taken in it
        discount: γ, fixed at 1.0
    """
    steps: Tuple[EpisodeStep, ...]
    terminal_reward: int
    horizon: int
    final_state: DecodeState
    discount: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'steps', tuple(self.steps))
        if self.discount != 1.0:
            raise InvalidConfiguration("Discount factor is fixed at 1.0")
        if self.terminal_reward not in (0, 1):
            raise InvalidConfiguration("Terminal reward must be 0 or 1")
        if not self.steps:
            raise InvalidConfiguration("An episode has at least one step")
        if len(self.steps) > self.horizon:
            raise InvalidConfiguration("Episode longer than its horizon")
        if any(step.reward != 0 for step in self.steps[:-1]):
            raise InvalidConfiguration("Only the final reward may be nonzero")
        if self.steps[-1].reward != self.terminal_reward:
            raise InvalidConfiguration("Final step reward must equal terminal_reward")
        if self.steps[-1].action != self.final_state.eos_index:
            raise InvalidConfiguration("Episodes end with eos")

    @property
    def actions(self) -> Tuple[int, ...]:
        return tuple(step.action for step in self.steps)

    @property
    def total_reward(self) -> int:
        return sum(step.reward for step in self.steps)

    def to_dict(self, vocab: Optional[Vocab] = None) -> Dict[str, Any]:
        """JSON-ready mirror of the trace fields."""
        def state_dict(state: DecodeState) -> Dict[str, Any]:
            return {
                'evidence_id': state.evidence_id,
                'prompt': list(state.prompt),
                'generated': list(state.generated),
            }

        out: Dict[str, Any] = {
            'steps': [
                {
                    'state': state_dict(step.state),
                    'action': step.action,
                    'policy': [float(p) for p in step.policy.probs],
                    'reward': step.reward,
                    'forced': step.forced,
                }
                for step in self.steps
            ],
            'terminal_reward': self.terminal_reward,
            'horizon': self.horizon,
            'discount': self.discount,
            'final_state': state_dict(self.final_state),
        }
        if vocab is not None:
            out['tokens'] = vocab.decode(self.actions)
        return out


class PolicyKind(Enum):
    """The five decoding algorithms."""
    GREEDY = "greedy"
    TEMPERATURE = "temperature"
    KL_GUIDED_TEMPERATURE = "kl_guided_temperature"
    CLASSIFIER_GUIDANCE = "classifier_guidance"
    CLASSIFIER_FREE = "classifier_free"


class QMode(Enum):
    """How classifier guidance obtains Q(s, a)."""
    BASE_ROLLOUT = "base_rollout"
    OPTIMAL_BACKWARD = "optimal_backward"


class HKind(Enum):
    """Shape of the monotone map from divergence to dynamic weight."""
    EXPONENTIAL = "exponential"
    LINEAR = "linear"


class LambdaSource(Enum):
    """Which divergence drives the dynamic weight of KL-guided temperature."""
    GENERATIVE = "generative"
    DISCRIMINATIVE = "discriminative"


_HYPERPARAMETERS = {
    PolicyKind.GREEDY: (),
    PolicyKind.TEMPERATURE: ('temperature',),
    PolicyKind.KL_GUIDED_TEMPERATURE: ('sigma',),
    PolicyKind.CLASSIFIER_GUIDANCE: ('lambda',),
    PolicyKind.CLASSIFIER_FREE: ('lambda',),
}

_PARAM_ALIASES = {'lambda': 'lambda', 'lam': 'lambda', 'temperature': 'temperature',
                  'T': 'temperature', 'sigma': 'sigma'}


@dataclass(frozen=True)
class PolicySpec:
    """
    Which decoding algorithm to run and with which hyperparameters.

    Hyperparameters that do not belong to ``kind`` are dropped at construction.
    """
    kind: PolicyKind
    lam: Optional[float] = None
    temperature: Optional[float] = None
    sigma: Optional[float] = None
    h_kind: HKind = HKind.EXPONENTIAL
    q_mode: QMode = QMode.BASE_ROLLOUT
    lambda_source: LambdaSource = LambdaSource.GENERATIVE

    def __post_init__(self):
        kind = PolicyKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'h_kind', HKind(self.h_kind))
        object.__setattr__(self, 'q_mode', QMode(self.q_mode))
        object.__setattr__(self, 'lambda_source', LambdaSource(self.lambda_source))
        relevant = _HYPERPARAMETERS[kind]
        for name, attr in (('lambda', 'lam'), ('temperature', 'temperature'), ('sigma', 'sigma')):
            if name not in relevant:
                object.__setattr__(self, attr, None)
            elif getattr(self, attr) is None:
                raise InvalidConfiguration(f"Policy {kind.value} requires {name}")
            else:
                object.__setattr__(self, attr, float(getattr(self, attr)))
        if self.lam is not None and not self.lam >= 0:
            raise NegativeLambda(f"lambda must be >= 0, got {self.lam}")
        if self.temperature is not None and not self.temperature > 0:
            raise NonPositiveTemperature(f"temperature must be > 0, got {self.temperature}")
        if self.sigma is not None and not self.sigma > 0:
            raise InvalidConfiguration(f"sigma must be > 0, got {self.sigma}")

    @property
    def hyperparameters(self) -> Tuple[str, ...]:
        return _HYPERPARAMETERS[self.kind]

    @property
    def needs_uncond(self) -> bool:
        return self.kind in (PolicyKind.CLASSIFIER_FREE, PolicyKind.KL_GUIDED_TEMPERATURE)

    @property
    def needs_values(self) -> bool:
        return self.kind is PolicyKind.CLASSIFIER_GUIDANCE or (
            self.kind is PolicyKind.KL_GUIDED_TEMPERATURE
            and self.lambda_source is LambdaSource.DISCRIMINATIVE
        )

    def with_param(self, name: str, value: float) -> PolicySpec:
        """Copy of this spec with one hyperparameter replaced."""
        canonical = _PARAM_ALIASES.get(name)
        if canonical is None or canonical not in self.hyperparameters:
            raise UnknownParameter(
                f"{name!r} is not a hyperparameter of {self.kind.value}; "
                f"expected one of {list(self.hyperparameters)}"
            )
        attr = 'lam' if canonical == 'lambda' else canonical
        return replace(self, **{attr: value})

    def param_value(self, name: str) -> float:
        canonical = _PARAM_ALIASES.get(name, name)
        attr = 'lam' if canonical == 'lambda' else canonical
        return getattr(self, attr)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> PolicySpec:
        """Build from the scenario-file form ``{kind, lambda?, temperature?, sigma?, h?, q_mode?}``."""
        if 'kind' not in data:
            raise InvalidConfiguration("policy needs a 'kind'")
        try:
            return cls(
                kind=PolicyKind(data['kind']),
                lam=data.get('lambda'),
                temperature=data.get('temperature'),
                sigma=data.get('sigma'),
                h_kind=HKind(data.get('h', HKind.EXPONENTIAL.value)),
                q_mode=QMode(data.get('q_mode', QMode.BASE_ROLLOUT.value)),
                lambda_source=LambdaSource(
                    data.get('lambda_source', LambdaSource.GENERATIVE.value)
                ),
            )
        except ValueError as exc:
            if isinstance(exc, GuidecError):
                raise
            raise InvalidConfiguration(f"Bad policy spec: {exc}") from None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {'kind': self.kind.value}
        if self.lam is not None:
            out['lambda'] = self.lam
        if self.temperature is not None:
            out['temperature'] = self.temperature
        if self.sigma is not None:
            out['sigma'] = self.sigma
            out['h'] = self.h_kind.value
            out['lambda_source'] = self.lambda_source.value
        if self.kind is PolicyKind.CLASSIFIER_GUIDANCE:
            out['q_mode'] = self.q_mode.value
        return out
