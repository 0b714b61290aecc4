"""
Exhaustive lattice search on very small simplices.
"""

import numpy as np

from ..core import TokenDist
from ..errors import DimensionTooLarge, InvalidConfiguration
from .optimizer import OracleResult, SimplexProblem

MAX_STEP = 1e-2


def simplex_lattice(n: int, divisions: int) -> np.ndarray:
    """All points of the n-simplex with coordinates in multiples of 1/divisions."""
    if n == 2:
        first = np.arange(divisions + 1) / divisions
        return np.stack([first, 1.0 - first], axis=-1)
    i, j = np.meshgrid(np.arange(divisions + 1), np.arange(divisions + 1), indexing='ij')
    mask = i + j <= divisions
    i, j = i[mask], j[mask]
    return np.stack([i, j, divisions - i - j], axis=-1) / divisions


def maximize_grid(problem: SimplexProblem, step: float = 1e-3) -> OracleResult:
    """
    Scan the simplex lattice with spacing ``step`` and return its argmax.

    Raises:
        DimensionTooLarge: If n is not 2 or 3
    """
    n = problem.dimension
    if n not in (2, 3):
        raise DimensionTooLarge(f"Grid search supports n in {{2, 3}}, got {n}")
    if not 0 < step <= MAX_STEP:
        raise InvalidConfiguration(f"step must be in (0, {MAX_STEP}], got {step}")
    divisions = int(round(1.0 / step))
    lattice = simplex_lattice(n, divisions)
    values = problem.value(lattice)
    best = int(np.argmax(np.where(np.isfinite(values), values, -np.inf)))
    return OracleResult(
        dist=TokenDist.from_probs(lattice[best]),
        value=float(values[best]),
        iterations=len(lattice),
    )
