"""
Exponentiated-gradient (entropic mirror) ascent on the probability simplex.
"""

import numpy as np
from scipy.special import logsumexp

from ..config import logger
from ..errors import DidNotConverge
from ..policies import episode_rng
from .optimizer import OracleResult, SimplexOptimizer, SimplexProblem


class ExponentiatedGradient(SimplexOptimizer):
    """
    Multiplicative update π' ∝ π · exp(η ∇J(π)), carried out in log space.

    Iterates are clipped to the interior before the gradient is evaluated,
    which keeps entropy terms finite near the boundary.
    """

    def step(self, log_probs: np.ndarray) -> np.ndarray:
        probs = np.maximum(np.exp(log_probs), self.config.clip)
        grad = self.problem.gradient(probs)
        updated = log_probs + self.config.step_size * grad
        return updated - logsumexp(updated)


def _starts(problem: SimplexProblem, seed: int) -> np.ndarray:
    n = problem.dimension
    rng = episode_rng(seed)
    uniform = np.full((1, n), 1.0 / n)
    if problem.config.restarts == 0:
        return uniform
    random_starts = rng.dirichlet(np.ones(n), size=problem.config.restarts)
    random_starts = np.maximum(random_starts, 1e-6)
    random_starts /= random_starts.sum(axis=1, keepdims=True)
    return np.vstack([uniform, random_starts])


def maximize_exponentiated_gradient(
    problem: SimplexProblem,
    seed: int = 0,
    strict: bool = False
) -> OracleResult:
    """
    Maximize J by mirror ascent from the uniform point and random interior starts.

    The best start wins, ties going to the lower start index.

    Args:
        problem: Simplex problem
        seed: Seed of the random starts
        strict: Raise instead of flagging when the winning start hit the cap

    Returns:
        OracleResult with ``converged`` False when the cap was hit

    Raises:
        DidNotConverge: In strict mode, carrying the best result
    """
    optimizer = ExponentiatedGradient(problem)
    best = None
    endpoints = []
    for index, start in enumerate(_starts(problem, seed)):
        result = optimizer.run(start)
        result.start = index
        endpoints.append(result.dist.probs)
        if best is None or result.value > best.value:
            best = result
    best.endpoints = endpoints

    if not best.converged:
        message = (f"Mirror ascent hit {problem.config.max_iterations} iterations "
                   f"without reaching tol {problem.config.tol} (n={problem.dimension})")
        if strict:
            raise DidNotConverge(message, result=best)
        logger.warning(message)
    logger.debug(f"Oracle best J={best.value:.12g} from start {best.start} "
                 f"after {best.iterations} iterations")
    return best
