"""
Information-theoretic primitives in natural-log units.

All functions take TokenDist values; the ``*_array`` helpers underneath work on
raw probability arrays along the last axis and are shared with the objective
evaluators, which need batched evaluation on simplex lattices.
"""

import math
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, rel_entr, xlogy

from .config import config
from .core import TokenDist
from .errors import DimensionMismatch, NonFiniteInput


def log_normalize(weights: Sequence[float]) -> TokenDist:
    """
    Turn finite log-weights into a distribution: w - logsumexp(w).

    logsumexp subtracts the maximum before exponentiating, so adding a constant
    to every weight leaves the result unchanged.

    Raises:
        NonFiniteInput: If any weight is NaN or infinite
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0 or not np.isfinite(w).all():
        raise NonFiniteInput("log_normalize needs a nonempty vector of finite log-weights")
    return TokenDist(w - logsumexp(w))


def _check_dims(p: TokenDist, q: TokenDist) -> None:
    if p.size != q.size:
        raise DimensionMismatch(f"Distributions have sizes {p.size} and {q.size}")


def _clamp(value: float) -> float:
    if value < 0.0 and value >= -config.numerical_slack:
        return 0.0
    return value


def entropy_array(probs: np.ndarray) -> np.ndarray:
    """-Σ p log p along the last axis, with 0·log 0 = 0."""
    return -np.sum(xlogy(probs, probs), axis=-1)


def cross_entropy_array(probs: np.ndarray, log_q: np.ndarray) -> np.ndarray:
    """-Σ p log q along the last axis; zero-mass terms of p contribute nothing."""
    terms = np.where(probs > 0, probs * np.where(probs > 0, log_q, 0.0), 0.0)
    return -np.sum(terms, axis=-1)


def kl_array(probs: np.ndarray, q_probs: np.ndarray) -> np.ndarray:
    """Σ p log(p/q) along the last axis."""
    return np.sum(rel_entr(probs, q_probs), axis=-1)


def entropy(p: TokenDist) -> float:
    """Shannon entropy H(p) in nats."""
    return _clamp(float(entropy_array(p.probs)))


def cross_entropy(p: TokenDist, q: TokenDist) -> float:
    """
    Cross entropy H(p, q) = -Σ p log q.

    Raises:
        DimensionMismatch: If p and q differ in size
    """
    _check_dims(p, q)
    return float(cross_entropy_array(p.probs, q.log_probs))


def kl_divergence(p: TokenDist, q: TokenDist) -> float:
    """
    Kullback-Leibler divergence D_KL(p || q).

    Computed directly in log space so that
    kl_divergence(p, q) == cross_entropy(p, q) - entropy(p) to rounding.

    Raises:
        DimensionMismatch: If p and q differ in size
    """
    _check_dims(p, q)
    probs = p.probs
    mask = probs > 0
    value = float(np.sum(probs[mask] * (p.log_probs[mask] - q.log_probs[mask])))
    return _clamp(value)


def pmi(log_conditional: float, log_marginal: float) -> float:
    """
    Pointwise mutual information log P(x|y)/P(x) from the two log-probabilities.

    Raises:
        NonFiniteInput: If either argument is not finite
    """
    if not (math.isfinite(log_conditional) and math.isfinite(log_marginal)):
        raise NonFiniteInput("pmi needs finite log-probabilities")
    return log_conditional - log_marginal


def bernoulli_kl(p: float, q: float) -> float:
    """D_KL(Bern(p) || Bern(q)) with the 0·log 0 convention."""
    if (q <= 0.0 and p > 0.0) or (q >= 1.0 and p < 1.0):
        return math.inf
    value = float(rel_entr(p, q) + rel_entr(1.0 - p, 1.0 - q))
    return _clamp(value)


def expected_log_ratio(p: TokenDist, log_ratio: Sequence[float]) -> float:
    """
    E_p[g] for a per-token log-ratio vector g.

    With g = log Q/V this is the discriminative approximate mutual information;
    with g = log P(·|s)/P(·|s⁻) it is the generative one.
    """
    g = np.asarray(log_ratio, dtype=np.float64)
    if g.size != p.size:
        raise DimensionMismatch(f"log-ratio has size {g.size}, distribution {p.size}")
    probs = p.probs
    mask = probs > 0
    return float(np.sum(probs[mask] * g[mask]))
