"""
Episode runner, metrics and hyperparameter sweeps.
"""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from tqdm import tqdm

from ..config import config, logger
from ..core import (
    DecodeState,
    EpisodeStep,
    EpisodeTrace,
    PolicySpec,
    QMode,
    TokenDist,
    advance,
    legal_actions,
)
from ..errors import EmptyTraceSet
from ..infotheory import entropy
from ..models.base import LanguageModel
from ..policies import episode_rng, sample_from_cdf
from ..valuation import ValueTables, backward_induction, discriminate, make_step_policy
from .scenario import Scenario

CSV_COLUMNS = (
    'policy', 'param', 'value', 'attribution_rate', 'distinct_1', 'distinct_2',
    'mean_loglik', 'mean_policy_entropy', 'n_samples', 'seed',
)


@dataclass
class MetricsRow:
    """Sample-level metrics for one policy setting."""
    policy: str
    param: Optional[str]
    value: Optional[float]
    attribution_rate: float
    distinct_1: float
    distinct_2: float
    mean_loglik: float
    mean_policy_entropy: float
    n_samples: int
    seed: int
    attribution_stderr: float = 0.0
    entropy_stderr: float = 0.0

    def csv_fields(self) -> List[str]:
        def number(x: Optional[float]) -> str:
            return '' if x is None else format(float(x), '.9g')

        return [
            self.policy,
            self.param or '',
            number(self.value),
            number(self.attribution_rate),
            number(self.distinct_1),
            number(self.distinct_2),
            number(self.mean_loglik),
            number(self.mean_policy_entropy),
            str(self.n_samples),
            str(self.seed),
        ]


def _distinct(sequences: Sequence[Tuple[int, ...]], n: int) -> float:
    unique = set()
    total = 0
    for seq in sequences:
        grams = [seq[i:i + n] for i in range(len(seq) - n + 1)]
        unique.update(grams)
        total += len(grams)
    return len(unique) / total if total else 0.0


def _stderr(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def compute_metrics(
    traces: Sequence[EpisodeTrace],
    lm: LanguageModel,
    policy: str = '',
    param: Optional[str] = None,
    value: Optional[float] = None,
    seed: int = 0
) -> MetricsRow:
    """
    Aggregate sampled episodes into one metrics row.

    distinct-n counts n-grams inside each trace (eos included) and divides the
    number of distinct n-grams over all traces by the total. Log-likelihood
    and policy entropy average over decision steps; forced eos steps are left
    out.

    Raises:
        EmptyTraceSet: If ``traces`` is empty
    """
    if not traces:
        raise EmptyTraceSet("compute_metrics needs at least one trace")
    rewards = [float(t.terminal_reward) for t in traces]
    sequences = [t.actions for t in traces]
    logliks: List[float] = []
    entropies: List[float] = []
    for trace in traces:
        for step in trace.steps:
            if step.forced:
                continue
            logliks.append(float(lm.next_dist(step.state).log_probs[step.action]))
            entropies.append(entropy(step.policy))

    return MetricsRow(
        policy=policy,
        param=param,
        value=value,
        attribution_rate=float(np.mean(rewards)),
        distinct_1=_distinct(sequences, 1),
        distinct_2=_distinct(sequences, 2),
        mean_loglik=min(float(np.mean(logliks)), 0.0) if logliks else 0.0,
        mean_policy_entropy=float(np.mean(entropies)) if entropies else 0.0,
        n_samples=len(traces),
        seed=seed,
        attribution_stderr=_stderr(rewards),
        entropy_stderr=_stderr(entropies),
    )


class EpisodeRunner:
    """
    Decodes episodes for a scenario.

    Value tables and per-state policy distributions depend only on the
    generated suffix once prompt and evidence are fixed, so both are cached
    across episodes.
    """

    def __init__(self, scenario: Scenario, threads: Optional[int] = None):
        """
        Initialize runner.

        Args:
            scenario: Scenario to decode
            threads: Worker threads for episode batches (defaults to config.threads)
        """
        self.scenario = scenario
        self.threads = threads or config.threads
        self._tables: Dict[Optional[PolicySpec], ValueTables] = {}
        self._steps: Dict[Tuple[PolicySpec, Tuple[int, ...]], Tuple[TokenDist, np.ndarray]] = {}

    def tables_for(self, spec: PolicySpec) -> Optional[ValueTables]:
        """Value tables a policy needs, built once per rollout mode."""
        if not spec.needs_values:
            return None
        key = spec if spec.q_mode is QMode.OPTIMAL_BACKWARD else None
        tables = self._tables.get(key)
        if tables is None:
            sc = self.scenario
            tables = backward_induction(
                sc.lm, sc.rule, sc.evidence_id, sc.prompt, sc.horizon,
                rollout=key, termination=sc.termination,
            )
            self._tables[key] = tables
        return tables

    def _step_distribution(
        self,
        spec: PolicySpec,
        state: DecodeState,
        legal: Tuple[int, ...]
    ) -> Tuple[TokenDist, np.ndarray]:
        key = (spec, state.generated)
        cached = self._steps.get(key)
        if cached is None:
            policy = make_step_policy(self.scenario.lm, spec, self.tables_for(spec))
            dist = policy(state, legal).expand(legal, self.scenario.vocab.size)
            cached = (dist, np.cumsum(dist.probs))
            self._steps[key] = cached
        return cached

    def run_episode(self, seed: int, spec: Optional[PolicySpec] = None) -> EpisodeTrace:
        """
        Decode one episode with a generator keyed on ``seed``.

        eos is forced at step T_max-1 if the policy has not emitted it.
        """
        sc = self.scenario
        spec = spec or sc.policy
        vocab = sc.vocab
        rng = episode_rng(seed)
        state = sc.lm.initial_state(sc.prompt, sc.evidence_id)
        steps: List[EpisodeStep] = []
        while True:
            legal = legal_actions(vocab.size, vocab.eos_index, state.depth, sc.horizon,
                                  sc.termination)
            dist, cdf = self._step_distribution(spec, state, legal)
            forced = len(legal) == 1
            action = legal[0] if forced else sample_from_cdf(cdf, rng)
            next_state = advance(state, action)
            reward = 0
            if next_state.is_terminal:
                reward = discriminate(sc.rule, next_state.generated, vocab.eos_index)
            steps.append(EpisodeStep(state, action, dist, reward, legal, forced))
            state = next_state
            if state.is_terminal:
                break
        logger.debug(f"Episode seed={seed}: {vocab.decode(state.generated)} reward={reward}")
        return EpisodeTrace(tuple(steps), reward, sc.horizon, state)

    def run_many(
        self,
        n: int,
        base_seed: int,
        spec: Optional[PolicySpec] = None
    ) -> List[EpisodeTrace]:
        """Episodes with seeds base_seed + i, in index order regardless of threading."""
        seeds = range(base_seed, base_seed + n)
        if self.threads > 1 and n > 1:
            # Fill the caches first so workers only read them.
            self.run_episode(base_seed, spec)
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(lambda s: self.run_episode(s, spec), seeds))
        return [self.run_episode(s, spec) for s in seeds]

    def evaluate(
        self,
        spec: Optional[PolicySpec] = None,
        seed: Optional[int] = None,
        param: Optional[str] = None,
        value: Optional[float] = None
    ) -> MetricsRow:
        """Run the scenario's sample count of episodes and aggregate them."""
        spec = spec or self.scenario.policy
        seed = self.scenario.seed if seed is None else seed
        traces = self.run_many(self.scenario.samples, seed, spec)
        return compute_metrics(traces, self.scenario.lm, spec.kind.value, param, value, seed)

    def sweep(
        self,
        parameter: str,
        values: Sequence[float],
        common_seeds: bool = False,
        progress: bool = False
    ) -> List[MetricsRow]:
        """
        One metrics row per value of ``parameter``, in input order.

        Point j runs with seed base_seed XOR j. With ``common_seeds`` every point
        reuses the base seed, so points differ only through the policy.

        Raises:
            UnknownParameter: If ``parameter`` is not a hyperparameter of the policy
        """
        base = self.scenario.policy
        specs = [base.with_param(parameter, v) for v in values]
        rows = []
        for j, (value, spec) in enumerate(tqdm(list(zip(values, specs)), disable=not progress,
                                               desc=f"sweep {parameter}")):
            seed = self.scenario.seed if common_seeds else self.scenario.seed ^ j
            row = self.evaluate(spec, seed, parameter, float(value))
            logger.info(
                f"{spec.kind.value} {parameter}={value}: attribution={row.attribution_rate:.4f} "
                f"entropy={row.mean_policy_entropy:.4f} loglik={row.mean_loglik:.4f}"
            )
            rows.append(row)
        return rows


def run_episode(scenario: Scenario, seed: int) -> EpisodeTrace:
    """Decode a single episode of ``scenario``."""
    return EpisodeRunner(scenario).run_episode(seed)


def sweep(
    scenario: Scenario,
    parameter: str,
    values: Sequence[float],
    common_seeds: bool = False
) -> List[MetricsRow]:
    """Sweep one hyperparameter of the scenario's policy."""
    return EpisodeRunner(scenario).sweep(parameter, values, common_seeds)


def format_csv(rows: Sequence[MetricsRow]) -> str:
    buffer = io.StringIO()
    write_csv(rows, buffer)
    return buffer.getvalue()


def write_csv(rows: Sequence[MetricsRow], target: Union[str, Path, TextIO]) -> None:
    """Write metrics rows with the fixed column set and '\\n' line endings."""
    if isinstance(target, (str, Path)):
        with open(target, 'w', encoding='utf-8', newline='') as handle:
            write_csv(rows, handle)
        return
    writer = csv.writer(target, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
