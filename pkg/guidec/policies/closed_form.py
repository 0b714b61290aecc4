"""
Closed-form decoding policies.

Every policy is a reweighting of the anchor distribution P_G computed in log
space and normalized once at the end.
"""

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ..core import HKind, LambdaSource, PolicyKind, PolicySpec, TokenDist
from ..errors import (
    DimensionMismatch,
    InvalidConfiguration,
    MissingGuidanceInput,
    NegativeKL,
    NegativeLambda,
    NonPositiveTemperature,
)
from ..infotheory import bernoulli_kl, kl_divergence, log_normalize
from .inputs import GuidanceInputs, floored_log

# 2**x - 1 overflows a double past x ≈ 1024; cap the exponent so λ stays finite.
_MAX_EXPONENT = 1000.0


class DynamicWeight(NamedTuple):
    """Dynamic weight λ = h(kl) and the matching temperature f = 1/(λ+1)."""
    lam: float
    temperature: float


def _finite_log_probs(p: TokenDist) -> np.ndarray:
    if not np.isfinite(p.log_probs).all():
        raise InvalidConfiguration("Anchor distributions must have full support")
    return p.log_probs


def _check_lambda(lam: float) -> None:
    if not lam >= 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")


def greedy_policy(p: TokenDist) -> TokenDist:
    """One-hot at argmax p, ties broken by the lowest index."""
    return TokenDist.one_hot(p.size, p.argmax())


def temperature_policy(p: TokenDist, temperature: float) -> TokenDist:
    """
    π ∝ p^(1/T).

    Raises:
        NonPositiveTemperature: If T <= 0
    """
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    if temperature == 1.0:
        return p
    return log_normalize(_finite_log_probs(p) / temperature)


def dynamic_lambda(
    kl: float,
    sigma: float,
    h_kind: HKind = HKind.EXPONENTIAL
) -> DynamicWeight:
    """
    Map a divergence to a guidance weight through a monotone h with h(0) = 0.

    The exponential shape is h(x) = 2^(x/σ) - 1, whose companion temperature is
    0.5^(x/σ); the linear shape is h(x) = x/σ.

    Raises:
        NegativeKL: If kl < 0
    """
    if not kl >= 0:
        raise NegativeKL(f"divergence must be >= 0, got {kl}")
    if not sigma > 0:
        raise InvalidConfiguration(f"sigma must be > 0, got {sigma}")
    h_kind = HKind(h_kind)
    ratio = kl / sigma
    if h_kind is HKind.EXPONENTIAL:
        exponent = min(ratio, _MAX_EXPONENT)
        lam = math.expm1(exponent * math.log(2.0))
        return DynamicWeight(lam, 0.5 ** exponent)
    return DynamicWeight(ratio, 1.0 / (ratio + 1.0))


def static_weight_policy(p: TokenDist, lam: float) -> TokenDist:
    """π ∝ p^(λ+1), i.e. temperature sampling at T = 1/(λ+1)."""
    _check_lambda(lam)
    return temperature_policy(p, 1.0 / (lam + 1.0))


def kl_guided_policy(
    p_cond: TokenDist,
    p_uncond: TokenDist,
    sigma: float,
    h_kind: HKind = HKind.EXPONENTIAL
) -> TokenDist:
    """
    KL-divergence guided temperature sampling.

    The weight comes from D_KL(P_G(·|s) || P_G(·|s⁻)); the first softmax is
    P_G itself and the second applies the dynamic temperature 1/(λ+1).
    """
    if p_cond.size != p_uncond.size:
        raise DimensionMismatch(f"Sizes {p_cond.size} and {p_uncond.size} differ")
    weight = dynamic_lambda(kl_divergence(p_cond, p_uncond), sigma, h_kind)
    return static_weight_policy(p_cond, weight.lam)


def discriminative_divergence(p_cond: TokenDist, q_values: Sequence[float], value: float) -> float:
    """
    Σ_a P_G(a|s) · D_KL(Bern(Q(s,a)) || Bern(V(s))).

    The discriminator-side counterpart of D_KL(P_G || P_G⁻): how much knowing the
    action changes the chance of a positive terminal reward.
    """
    q = np.asarray(q_values, dtype=np.float64)
    probs = p_cond.probs
    if q.size != probs.size:
        raise DimensionMismatch(f"q_values has size {q.size}, p_cond {probs.size}")
    return float(sum(p * bernoulli_kl(float(qa), value) for p, qa in zip(probs, q) if p > 0))


def classifier_guidance_policy(
    p_cond: TokenDist,
    q_over_v: Sequence[float],
    lam: float
) -> TokenDist:
    """
    π ∝ (Q/V)^λ · P_G.

    Scaling every ratio by the same constant (dropping V) does not change the
    result.

    Raises:
        NegativeLambda: If λ < 0
    """
    _check_lambda(lam)
    ratios = np.asarray(q_over_v, dtype=np.float64)
    if ratios.size != p_cond.size:
        raise DimensionMismatch(f"q_over_v has size {ratios.size}, p_cond {p_cond.size}")
    if (ratios < 0).any() or not np.isfinite(ratios).all():
        raise InvalidConfiguration("q_over_v entries must be finite and nonnegative")
    if lam == 0.0:
        return p_cond
    return log_normalize(lam * floored_log(ratios) + _finite_log_probs(p_cond))


def classifier_free_policy(p_cond: TokenDist, p_uncond: TokenDist, lam: float) -> TokenDist:
    """
    π ∝ (P_G(·|s) / P_G(·|s⁻))^λ · P_G(·|s).

    Raises:
        DimensionMismatch: If the distributions differ in size
        NegativeLambda: If λ < 0
    """
    if p_cond.size != p_uncond.size:
        raise DimensionMismatch(f"Sizes {p_cond.size} and {p_uncond.size} differ")
    _check_lambda(lam)
    if lam == 0.0:
        return p_cond
    log_cond = _finite_log_probs(p_cond)
    return log_normalize((1.0 + lam) * log_cond - lam * _finite_log_probs(p_uncond))


def optimal_action(q_over_v: Sequence[float]) -> int:
    """Deterministic optimal action argmax_a log Q(s,a)/V(s); ties to the lowest index."""
    return int(np.argmax(np.asarray(q_over_v, dtype=np.float64)))


def guided_distribution(spec: PolicySpec, inputs: GuidanceInputs) -> TokenDist:
    """
    Next-token distribution of the policy described by ``spec``.

    Raises:
        MissingGuidanceInput: If ``inputs`` lacks what the policy kind needs
    """
    kind = spec.kind
    p_cond = inputs.p_cond
    if kind is PolicyKind.GREEDY:
        return greedy_policy(p_cond)
    if kind is PolicyKind.TEMPERATURE:
        return temperature_policy(p_cond, spec.temperature)
    if kind is PolicyKind.KL_GUIDED_TEMPERATURE:
        if spec.lambda_source is LambdaSource.GENERATIVE:
            return kl_guided_policy(p_cond, inputs.require_uncond(), spec.sigma, spec.h_kind)
        return static_weight_policy(p_cond, dynamic_weight_of(spec, inputs).lam)
    if kind is PolicyKind.CLASSIFIER_GUIDANCE:
        return classifier_guidance_policy(p_cond, inputs.require_q_over_v(), spec.lam)
    return classifier_free_policy(p_cond, inputs.require_uncond(), spec.lam)


def dynamic_weight_of(spec: PolicySpec, inputs: GuidanceInputs) -> Optional[DynamicWeight]:
    """The step's dynamic weight for KL-guided specs, else None."""
    if spec.kind is not PolicyKind.KL_GUIDED_TEMPERATURE:
        return None
    if spec.lambda_source is LambdaSource.DISCRIMINATIVE:
        if inputs.q_values is None or inputs.value is None:
            raise MissingGuidanceInput("Discriminative weight needs Q(s,·) and V(s)")
        divergence = discriminative_divergence(inputs.p_cond, inputs.q_values, inputs.value)
    else:
        divergence = kl_divergence(inputs.p_cond, inputs.require_uncond())
    return dynamic_lambda(divergence, spec.sigma, spec.h_kind)


def episode_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for one episode; seed s and s+1 give independent streams."""
    if seed < 0:
        raise InvalidConfiguration(f"seed must be >= 0, got {seed}")
    return np.random.Generator(np.random.Philox(key=int(seed)))


def sample_action(dist: TokenDist, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over the vocabulary order."""
    return sample_from_cdf(np.cumsum(dist.probs), rng)


def sample_from_cdf(cdf: np.ndarray, rng: np.random.Generator) -> int:
    return inverse_cdf(cdf, rng.random())


def inverse_cdf(cdf: np.ndarray, u: float) -> int:
    """Smallest index whose cumulative mass exceeds u·total."""
    index = int(np.searchsorted(cdf, u * cdf[-1], side='right'))
    return min(index, cdf.size - 1)
