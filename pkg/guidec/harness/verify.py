"""
Verification suites.

Each suite runs a batch of numerical checks and returns a machine-readable
report. Verification uses its own fixed seed so its results never depend on a
scenario's seed.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from ..config import logger
from ..core import PolicyKind, PolicySpec, QMode, Termination, TokenDist, Vocab
from ..errors import InvalidConfiguration
from ..infotheory import cross_entropy, entropy, expected_log_ratio, kl_divergence
from ..models import train_tabular
from ..oracle import (
    OracleConfig,
    SimplexProblem,
    gradient_check,
    maximize_exponentiated_gradient,
    maximize_grid,
)
from ..policies import (
    CrossEntropyPenaltyObjective,
    GreedyObjective,
    GuidanceInputs,
    GuidedKLObjective,
    ObjectiveForm,
    Objective,
    SelfReferentialObjective,
    TemperatureObjective,
    build_objective,
    classifier_free_policy,
    classifier_guidance_policy,
    dynamic_lambda,
    episode_rng,
    greedy_policy,
    kl_guided_policy,
    static_weight_policy,
    temperature_policy,
)
from ..valuation import (
    DiscriminatorRule,
    backward_induction,
    base_step_policy,
    enumerate_values,
    make_step_policy,
    rollout_estimate,
)
from .scenario import two_step_scenario

SUITES = ('theorems', 'identities', 'valuation')
LAMBDAS = (0.25, 1.0, 4.0)
TEMPERATURES = (0.25, 0.5, 2.0)
SIGMAS = (0.5, 1.0, 2.0)
CLOSED_FORM_KINDS = (
    PolicyKind.CLASSIFIER_GUIDANCE,
    PolicyKind.CLASSIFIER_FREE,
    PolicyKind.KL_GUIDED_TEMPERATURE,
    PolicyKind.TEMPERATURE,
    PolicyKind.GREEDY,
)
TWO_FORM_KINDS = (PolicyKind.KL_GUIDED_TEMPERATURE, PolicyKind.TEMPERATURE)


@dataclass(frozen=True)
class VerifyConfig:
    """
    Settings of the verification suites.

    Attributes:
        trials: Random instances per policy
        vocab_max: Largest simplex dimension drawn
        tol: L∞ tolerance between closed forms and the oracle
        objective_gap: Allowed J(oracle) - J(closed form)
        gradient_points: Interior points per objective in gradient checks
        gradient_tol: Allowed relative gradient error
        identity_pairs: Random pairs for the identity checks
        grid_trials: Instances per policy for grid-vs-ascent agreement
        grid_step: Lattice spacing
        valuation_trials: Random models for the valuation checks
        mc_trials: Seeded Monte Carlo trials
        mc_samples: Rollouts per Monte Carlo trial
        seed: Internal seed, independent of any scenario
        oracle: Oracle settings
    """
    trials: int = 100
    vocab_max: int = 16
    tol: float = 1e-3
    objective_gap: float = 1e-6
    gradient_points: int = 20
    gradient_tol: float = 1e-5
    identity_pairs: int = 1000
    grid_trials: int = 10
    grid_step: float = 1e-3
    valuation_trials: int = 20
    mc_trials: int = 100
    mc_samples: int = 10_000
    seed: int = 0
    oracle: OracleConfig = field(default_factory=OracleConfig)


@dataclass
class CheckResult:
    """Outcome of one named check with its worst-case discrepancy."""
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ''


@dataclass
class VerifyReport:
    suite: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, worst: float, tolerance: float, detail: str = '',
            lower_is_better: bool = True) -> CheckResult:
        passed = worst <= tolerance if lower_is_better else worst >= tolerance
        check = CheckResult(name, bool(passed), float(worst), float(tolerance), detail)
        self.checks.append(check)
        level = logger.info if passed else logger.warning
        level(f"[{self.suite}] {name}: worst={worst:.3g} tol={tolerance:.3g} "
              f"{'ok' if passed else 'FAILED'}")
        return check

    def to_dict(self) -> Dict[str, Any]:
        return {
            'suite': self.suite,
            'passed': self.passed,
            'checks': [asdict(check) for check in self.checks],
        }


def _random_dist(rng: np.random.Generator, n: int, floor: float = 1e-3) -> TokenDist:
    probs = np.maximum(rng.dirichlet(np.ones(n)), floor)
    return TokenDist.from_probs(probs / probs.sum())


def _linf(p: TokenDist, q: TokenDist) -> float:
    return float(np.max(np.abs(p.probs - q.probs)))


Instance = Tuple[str, Objective, TokenDist]


def _policy_instance(kind: PolicyKind, rng: np.random.Generator, n: int,
                     form: ObjectiveForm = ObjectiveForm.ENTROPY) -> Instance:
    """Random objective for one policy together with its closed-form maximizer."""
    p_cond = _random_dist(rng, n)
    if kind is PolicyKind.CLASSIFIER_GUIDANCE:
        lam = float(rng.choice(LAMBDAS))
        q_values = rng.uniform(0.05, 1.0, size=n)
        inputs = GuidanceInputs.from_values(p_cond, q_values)
        spec = PolicySpec(PolicyKind.CLASSIFIER_GUIDANCE, lam=lam)
        closed = classifier_guidance_policy(p_cond, inputs.q_over_v, lam)
    elif kind is PolicyKind.CLASSIFIER_FREE:
        lam = float(rng.choice(LAMBDAS))
        inputs = GuidanceInputs(p_cond, p_uncond=_random_dist(rng, n))
        spec = PolicySpec(PolicyKind.CLASSIFIER_FREE, lam=lam)
        closed = classifier_free_policy(p_cond, inputs.p_uncond, lam)
    elif kind is PolicyKind.KL_GUIDED_TEMPERATURE:
        sigma = float(rng.choice(SIGMAS))
        inputs = GuidanceInputs(p_cond, p_uncond=_random_dist(rng, n))
        spec = PolicySpec(PolicyKind.KL_GUIDED_TEMPERATURE, sigma=sigma)
        closed = kl_guided_policy(p_cond, inputs.p_uncond, sigma)
    elif kind is PolicyKind.TEMPERATURE:
        temperature = float(rng.choice(TEMPERATURES))
        inputs = GuidanceInputs(p_cond)
        spec = PolicySpec(PolicyKind.TEMPERATURE, temperature=temperature)
        closed = temperature_policy(p_cond, temperature)
    else:
        inputs = GuidanceInputs(p_cond)
        spec = PolicySpec(PolicyKind.GREEDY)
        closed = greedy_policy(p_cond)
    return spec.kind.value, build_objective(spec, inputs, form), closed


def run_theorems(cfg: VerifyConfig) -> VerifyReport:
    """Closed forms against the oracle, grid agreement and gradient checks."""
    report = VerifyReport('theorems')
    rng = episode_rng(cfg.seed)

    for kind in CLOSED_FORM_KINDS:
        forms = (ObjectiveForm.ENTROPY, ObjectiveForm.CROSS_ENTROPY) if kind in TWO_FORM_KINDS \
            else (ObjectiveForm.ENTROPY,)
        worst_linf = 0.0
        worst_gap = -np.inf
        mismatched = 0
        name = ''
        for trial in range(cfg.trials):
            n = int(rng.integers(2, cfg.vocab_max + 1))
            state = rng.bit_generator.state
            for form in forms:
                rng.bit_generator.state = state
                name, objective, closed = _policy_instance(kind, rng, n, form)
                problem = SimplexProblem(objective, cfg.oracle)
                result = maximize_exponentiated_gradient(problem, seed=cfg.seed + trial)
                gap = result.value - objective(closed)
                worst_gap = max(worst_gap, gap)
                if kind is PolicyKind.GREEDY:
                    mismatched += int(result.dist.argmax() != closed.argmax())
                else:
                    worst_linf = max(worst_linf, _linf(result.dist, closed))
        if kind is PolicyKind.GREEDY:
            report.add(f"{name}: oracle vertex matches argmax", mismatched, 0,
                       f"{mismatched} of {cfg.trials} instances disagree")
        else:
            report.add(f"{name}: L-inf to oracle", worst_linf, cfg.tol,
                       f"{cfg.trials} instances, forms {[f.value for f in forms]}")
        report.add(f"{name}: objective gap", worst_gap, cfg.objective_gap,
                   "J(oracle) - J(closed form)")

    for kind in CLOSED_FORM_KINDS[:-1]:
        worst = 0.0
        name = ''
        for trial in range(cfg.grid_trials):
            n = 2 + trial % 2
            name, objective, _ = _policy_instance(kind, rng, n)
            problem = SimplexProblem(objective, cfg.oracle)
            grid = maximize_grid(problem, cfg.grid_step)
            ascent = maximize_exponentiated_gradient(problem, seed=cfg.seed)
            worst = max(worst, _linf(grid.dist, ascent.dist))
        report.add(f"{name}: grid vs ascent", worst, 2 * cfg.grid_step,
                   f"n in {{2, 3}}, step {cfg.grid_step}")

    for name, factory in _gradient_objectives():
        worst = 0.0
        for _ in range(cfg.gradient_points):
            n = int(rng.integers(2, cfg.vocab_max + 1))
            objective = factory(rng, n)
            point = _random_dist(rng, n, floor=1e-2)
            worst = max(worst, gradient_check(SimplexProblem(objective, cfg.oracle), point))
        report.add(f"gradient: {name}", worst, cfg.gradient_tol,
                   f"{cfg.gradient_points} interior points")
    return report


def _gradient_objectives() -> List[Tuple[str, Callable[[np.random.Generator, int], Objective]]]:
    def guided(rng, n):
        return GuidedKLObjective(_random_dist(rng, n), rng.normal(size=n),
                                 float(rng.choice(LAMBDAS)))

    def penalty(form):
        return lambda rng, n: CrossEntropyPenaltyObjective(
            _random_dist(rng, n), float(rng.choice(LAMBDAS)), form)

    def temperature(form):
        return lambda rng, n: TemperatureObjective(
            _random_dist(rng, n), float(rng.choice(TEMPERATURES)), form)

    return [
        ('guided', guided),
        ('kl_guided_temperature/cross_entropy', penalty(ObjectiveForm.CROSS_ENTROPY)),
        ('kl_guided_temperature/entropy', penalty(ObjectiveForm.ENTROPY)),
        ('temperature/entropy', temperature(ObjectiveForm.ENTROPY)),
        ('temperature/cross_entropy', temperature(ObjectiveForm.CROSS_ENTROPY)),
        ('greedy', lambda rng, n: GreedyObjective(_random_dist(rng, n))),
        ('self_referential', lambda rng, n: SelfReferentialObjective(
            _random_dist(rng, n), _random_dist(rng, n), float(rng.choice(LAMBDAS)))),
    ]


def run_identities(cfg: VerifyConfig) -> VerifyReport:
    """Algebraic identities and degenerate reductions of the closed forms."""
    report = VerifyReport('identities')
    rng = episode_rng(cfg.seed)

    chain = 0.0
    pinsker_ratio = np.inf
    self_kl = 0.0
    denominator = 0.0
    for _ in range(cfg.identity_pairs):
        n = int(rng.integers(2, cfg.vocab_max + 1))
        p, q = _random_dist(rng, n), _random_dist(rng, n)
        chain = max(chain, abs(cross_entropy(p, q) - (kl_divergence(p, q) + entropy(p))))
        l1 = float(np.sum(np.abs(p.probs - q.probs)))
        if l1 > 0.0:
            pinsker_ratio = min(pinsker_ratio, kl_divergence(p, q) / (0.5 * l1 ** 2))
        self_kl = max(self_kl, kl_divergence(p, p))
        ratios = rng.uniform(0.05, 2.0, size=n)
        lam = float(rng.choice(LAMBDAS))
        scale = float(rng.uniform(0.1, 10.0))
        denominator = max(denominator, _linf(
            classifier_guidance_policy(p, ratios, lam),
            classifier_guidance_policy(p, ratios * scale, lam),
        ))
    report.add("H(p,q) = KL(p||q) + H(p)", chain, 1e-10, f"{cfg.identity_pairs} pairs")
    report.add("classifier guidance ignores the V denominator", denominator, 1e-12)
    report.add("KL(p||p) = 0", self_kl, 0.0)
    report.add("KL(p||q) > 0 for p != q", pinsker_ratio, 1.0 - 1e-9,
               "smallest KL / (0.5 * L1^2) over distinct pairs", lower_is_better=False)

    reductions = 0.0
    greedy_gap = 0.0
    argmax_flips = 0
    entropy_drops = 0.0
    tilt_drops = 0.0
    temperatures = np.linspace(0.05, 2.0, 40)
    lambda_grid = np.linspace(0.0, 8.0, 33)
    for _ in range(cfg.identity_pairs):
        n = int(rng.integers(2, cfg.vocab_max + 1))
        p, other = _random_dist(rng, n), _random_dist(rng, n)
        lam = float(rng.choice(LAMBDAS))
        reductions = max(
            reductions,
            _linf(classifier_guidance_policy(p, rng.uniform(0.05, 2.0, size=n), 0.0), p),
            _linf(classifier_free_policy(p, other, 0.0), p),
            _linf(kl_guided_policy(p, p, float(rng.choice(SIGMAS))), p),
            _linf(temperature_policy(p, 1.0), p),
            _linf(static_weight_policy(p, lam), temperature_policy(p, 1.0 / (lam + 1.0))),
        )
        if dynamic_lambda(kl_divergence(p, p), 1.0).lam != 0.0:
            reductions = np.inf

        probs = np.sort(p.probs)
        if probs[-1] - probs[-2] >= 0.01:
            greedy_gap = max(greedy_gap, _linf(temperature_policy(p, 1e-4), greedy_policy(p)))
        if probs[-1] > probs[-2]:
            top = p.argmax()
            argmax_flips += sum(temperature_policy(p, t).argmax() != top
                                for t in (1e-3, 0.1, 0.5, 1.0, 2.0, 10.0))

        entropies = [entropy(temperature_policy(p, float(t))) for t in temperatures]
        entropy_drops = max(entropy_drops, max(0.0, -float(np.min(np.diff(entropies)))))
        g = p.log_probs - other.log_probs
        tilts = [expected_log_ratio(classifier_free_policy(p, other, float(lam)), g)
                 for lam in lambda_grid]
        tilt_drops = max(tilt_drops, max(0.0, -float(np.min(np.diff(tilts)))))

    report.add("degenerate reductions are exact", reductions, 0.0,
               "lambda=0, p_cond=p_uncond, T=1, static lambda")
    report.add("greedy limit at T=1e-4", greedy_gap, 1e-6, "top-two gap >= 0.01")
    report.add("temperature preserves the argmax", argmax_flips, 0)
    report.add("entropy nondecreasing in T", entropy_drops, 1e-12)
    report.add("guidance term nondecreasing in lambda", tilt_drops, 1e-12)
    return report


def _random_model(rng: np.random.Generator) -> Tuple[Any, DiscriminatorRule, int, Termination]:
    size = int(rng.integers(3, 7))
    tokens = [chr(ord('a') + i) for i in range(size - 1)] + ['eos']
    vocab = Vocab.from_tokens(tokens, 'eos')
    horizon = int(rng.integers(2, 6))
    order = int(rng.integers(0, 3))
    corpus = []
    for i in range(int(rng.integers(2, 8))):
        length = int(rng.integers(0, horizon))
        body = tuple(int(t) for t in rng.integers(0, size - 1, size=length))
        corpus.append((f"E{i % 2}", body + (vocab.eos_index,)))
    lm = train_tabular(corpus, vocab, order, float(rng.uniform(0.2, 2.0)))
    content = int(rng.integers(0, size - 1))
    if rng.random() < 0.5:
        rule = DiscriminatorRule.contains_token(content)
    else:
        rule = DiscriminatorRule.contains_any([content, int(rng.integers(0, size - 1))])
    termination = Termination.FREE if rng.random() < 0.5 else Termination.AT_HORIZON
    return lm, rule, horizon, termination


def run_valuation(cfg: VerifyConfig, progress: Optional[Callable[[], None]] = None
                  ) -> VerifyReport:
    """Backward induction against enumeration, Bellman, improvement and Monte Carlo."""
    report = VerifyReport('valuation')
    rng = episode_rng(cfg.seed)

    enumeration = 0.0
    action_enumeration = 0.0
    bellman = 0.0
    improvement = -np.inf
    for _ in range(cfg.valuation_trials):
        lm, rule, horizon, termination = _random_model(rng)
        evidence = lm.evidence_ids[0]
        lam = float(rng.choice(LAMBDAS))
        guided = PolicySpec(PolicyKind.CLASSIFIER_GUIDANCE, lam=lam,
                            q_mode=QMode.OPTIMAL_BACKWARD)
        base = backward_induction(lm, rule, evidence, (), horizon, termination=termination)
        optimal = backward_induction(lm, rule, evidence, (), horizon, rollout=guided,
                                     termination=termination)
        exact_base = enumerate_values(lm, rule, evidence, (), horizon,
                                      base_step_policy(lm), termination)
        exact_optimal = enumerate_values(lm, rule, evidence, (), horizon,
                                         make_step_policy(lm, guided, optimal), termination)
        enumeration = max(enumeration, abs(base.root_value - exact_base),
                          abs(optimal.root_value - exact_optimal))
        for tables, step in ((base, base_step_policy(lm)),
                            (optimal, make_step_policy(lm, guided, optimal))):
            for action, q_value in zip(tables.legal[()], tables.action_values(())):
                exact_q = enumerate_values(lm, rule, evidence, (), horizon, step, termination,
                                           generated=(action,))
                action_enumeration = max(action_enumeration, abs(q_value - exact_q))
        for tables in (base, optimal):
            for suffix, value in tables.v.items():
                rho = tables.rollout[suffix].probs
                bellman = max(bellman, abs(value - float(np.dot(rho, tables.q[suffix]))))
        improvement = max(improvement, base.root_value - optimal.root_value)
    report.add("backward induction = enumeration", enumeration, 1e-12,
               f"{cfg.valuation_trials} random models, |vocab| <= 6, horizon <= 5")
    report.add("Q(root, a) = enumeration from s ∪ a", action_enumeration, 1e-12,
               "every legal first action, base and optimal tables")
    report.add("Bellman consistency", bellman, 1e-9)
    report.add("guided rollouts do not lower V(root)", improvement, 1e-9,
               "V_base - V_optimal")

    scenario = two_step_scenario()
    exact = backward_induction(scenario.lm, scenario.rule, scenario.evidence_id,
                               scenario.prompt, scenario.horizon,
                               termination=scenario.termination).root_value
    root = scenario.lm.initial_state(scenario.prompt, scenario.evidence_id)
    policy = base_step_policy(scenario.lm)
    inside = 0
    worst_z = 0.0
    for trial in range(cfg.mc_trials):
        mean, stderr = rollout_estimate(policy, scenario.lm, scenario.rule, root,
                                        scenario.horizon, cfg.mc_samples,
                                        cfg.seed + trial * cfg.mc_samples,
                                        scenario.termination)
        z = abs(mean - exact) / stderr if stderr > 0 else (0.0 if mean == exact else np.inf)
        worst_z = max(worst_z, z)
        inside += int(z <= 4.0)
        if progress is not None:
            progress()
    required = int(np.ceil(0.99 * cfg.mc_trials))
    report.add("Monte Carlo within 4 stderr", inside, required,
               f"{inside}/{cfg.mc_trials} trials, worst z {worst_z:.2f}, exact V {exact:.6f}",
               lower_is_better=False)
    return report


def verify(suite: str, cfg: Optional[VerifyConfig] = None) -> VerifyReport:
    """
    Run one verification suite.

    Failures are report content; nothing is raised for a failed check.
    """
    cfg = cfg or VerifyConfig()
    if suite == 'theorems':
        report = run_theorems(cfg)
    elif suite == 'identities':
        report = run_identities(cfg)
    elif suite == 'valuation':
        report = run_valuation(cfg)
    else:
        raise InvalidConfiguration(f"Unknown suite {suite!r}; expected one of {SUITES}")
    logger.info(f"Suite {suite}: {'passed' if report.passed else 'FAILED'} "
                f"({len(report.checks)} checks)")
    return report


def write_report(report: VerifyReport, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + '\n', encoding='utf-8')


__all__ = [
    'SUITES',
    'VerifyConfig',
    'CheckResult',
    'VerifyReport',
    'run_theorems',
    'run_identities',
    'run_valuation',
    'verify',
    'write_report',
]
