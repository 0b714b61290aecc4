"""
Finite-difference check of analytic objective gradients.
"""

import numpy as np

from ..core import TokenDist
from ..errors import DimensionMismatch, PointTooCloseToBoundary
from .optimizer import SimplexProblem

MIN_INTERIOR_PROB = 1e-4


def gradient_check(problem: SimplexProblem, point: TokenDist, h: float = 1e-6) -> float:
    """
    Max relative error between ∇J and central differences along the simplex.

    Differences are taken along the tangent directions e_i - 1/n, so the
    comparison ignores gradient components normal to the simplex. The error of
    each direction is |fd - analytic| / max(1, |analytic|).

    Raises:
        PointTooCloseToBoundary: If any coordinate is below 1e-4
    """
    if point.size != problem.dimension:
        raise DimensionMismatch(f"Point has size {point.size}, problem {problem.dimension}")
    probs = point.probs
    if probs.min() < MIN_INTERIOR_PROB:
        raise PointTooCloseToBoundary(
            f"Smallest coordinate {probs.min():.3g} is below {MIN_INTERIOR_PROB}"
        )
    n = problem.dimension
    directions = np.eye(n) - 1.0 / n
    grad = problem.gradient(probs)
    forward = problem.value(probs + h * directions)
    backward = problem.value(probs - h * directions)
    finite = (forward - backward) / (2.0 * h)
    analytic = directions @ grad
    errors = np.abs(finite - analytic) / np.maximum(1.0, np.abs(analytic))
    return float(errors.max())
