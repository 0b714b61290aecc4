"""
Alternating scheme for the self-referential guidance objective.

The objective λ·D_KL(π || r) - D_KL(π || P_G) puts the policy inside its own
guidance term. Each round holds the inner π fixed at the previous iterate,
which turns the round into λ·E_π[log π_prev - log r] - D_KL(π || P_G), and
solves that with mirror ascent. Convergence is not guaranteed: the map is a
contraction only for λ < 1, so the scheme reports what happened instead of
assuming a fixed point.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..config import logger
from ..core import TokenDist
from ..errors import DidNotConverge, DimensionMismatch, NegativeLambda
from ..policies.objectives import GuidedKLObjective, SelfReferentialObjective
from .exponentiated import maximize_exponentiated_gradient
from .optimizer import OracleConfig, SimplexProblem


@dataclass
class AlternatingResult:
    """
    Attributes:
        dist: Last iterate
        value: Self-referential objective at the last iterate
        rounds: Outer rounds run
        converged: Whether successive rounds met the outer tolerance
        changes: L∞ change after each round
    """
    dist: TokenDist
    value: float
    rounds: int
    converged: bool
    changes: List[float] = field(default_factory=list)


def maximize_self_referential(
    anchor: TokenDist,
    reference: TokenDist,
    lam: float,
    config: OracleConfig = OracleConfig(),
    seed: int = 0,
    strict: bool = False
) -> AlternatingResult:
    """
    Run the alternating fixed-point iteration starting from π_0 = P_G.

    Args:
        anchor: P_G(·|s)
        reference: Fixed stand-in r for π(·|s⁻)
        lam: Guidance weight
        config: Oracle settings; ``outer_rounds`` caps the rounds
        seed: Seed for the inner solver's random starts
        strict: Raise DidNotConverge instead of returning a flagged result

    Returns:
        AlternatingResult
    """
    if anchor.size != reference.size:
        raise DimensionMismatch(f"Sizes {anchor.size} and {reference.size} differ")
    if not lam >= 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")

    target = SelfReferentialObjective(anchor, reference, lam)
    current = anchor
    changes: List[float] = []
    converged = False
    for round_index in range(1, config.outer_rounds + 1):
        log_current = np.log(np.maximum(current.probs, config.clip))
        guidance = log_current - reference.log_probs
        inner = SimplexProblem(GuidedKLObjective(anchor, guidance, lam), config)
        updated = maximize_exponentiated_gradient(inner, seed=seed).dist
        change = float(np.max(np.abs(updated.probs - current.probs)))
        changes.append(change)
        current = updated
        if change <= config.outer_tol:
            converged = True
            break

    result = AlternatingResult(
        dist=current,
        value=float(target.value(current.probs)),
        rounds=len(changes),
        converged=converged,
        changes=changes,
    )
    if not converged:
        message = (f"Self-referential scheme did not settle after {result.rounds} rounds "
                   f"(lambda={lam}, last change {changes[-1]:.3g})")
        if strict:
            raise DidNotConverge(message, result=result)
        logger.warning(message)
    else:
        logger.info(f"Self-referential scheme settled after {result.rounds} rounds")
    return result
