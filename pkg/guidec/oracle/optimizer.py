"""
Base simplex optimizer and the problem/result containers it works with.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..core import TokenDist
from ..errors import InvalidConfiguration
from ..policies.objectives import Objective


@dataclass(frozen=True)
class OracleConfig:
    """
    Settings of the simplex oracle.

    Attributes:
        step_size: Constant mirror-ascent step η
        max_iterations: Iteration cap per start
        restarts: Random interior starts in addition to the uniform one
        tol: Convergence threshold on the L∞ change between iterates
        clip: Floor applied to iterates before evaluating the gradient
        outer_rounds: Cap on rounds of the alternating scheme
        outer_tol: Convergence threshold between alternating rounds
    """
    step_size: float = 0.5
    max_iterations: int = 10_000
    restarts: int = 3
    tol: float = 1e-10
    clip: float = 1e-12
    outer_rounds: int = 50
    outer_tol: float = 1e-8

    def __post_init__(self):
        if not self.step_size > 0:
            raise InvalidConfiguration(f"step_size must be > 0, got {self.step_size}")
        if self.max_iterations < 1 or self.outer_rounds < 1:
            raise InvalidConfiguration("Iteration caps must be positive")
        if self.restarts < 0:
            raise InvalidConfiguration(f"restarts must be >= 0, got {self.restarts}")


@dataclass
class SimplexProblem:
    """
    Maximize an objective over the probability simplex of its anchor's size.

    Attributes:
        objective: J(π) with analytic gradient
        config: Oracle settings
    """
    objective: Objective
    config: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self):
        if self.dimension < 2:
            raise InvalidConfiguration(f"Simplex problems need n >= 2, got {self.dimension}")
        uniform = np.full(self.dimension, 1.0 / self.dimension)
        if not np.isfinite(self.objective.value(uniform)):
            raise InvalidConfiguration("Objective is not finite at the simplex center")

    @property
    def dimension(self) -> int:
        return self.objective.dimension

    def value(self, probs: np.ndarray) -> np.ndarray:
        return self.objective.value(probs)

    def gradient(self, probs: np.ndarray) -> np.ndarray:
        return self.objective.gradient(probs)


@dataclass
class OracleResult:
    """
    Outcome of a simplex maximization.

    Attributes:
        dist: Best point found
        value: J at that point
        converged: Whether the winning start met the tolerance
        iterations: Iterations used by the winning start
        start: Index of the winning start (0 is uniform)
        endpoints: Final iterate of every start, in start order
    """
    dist: TokenDist
    value: float
    converged: bool = True
    iterations: int = 0
    start: int = 0
    endpoints: List[np.ndarray] = field(default_factory=list)

    @property
    def probs(self) -> np.ndarray:
        return self.dist.probs


class SimplexOptimizer(ABC):
    """Abstract base class for iterative simplex optimizers."""

    def __init__(self, problem: SimplexProblem):
        """
        Initialize optimizer.

        Args:
            problem: Problem to maximize
        """
        self.problem = problem
        self.config = problem.config

    @abstractmethod
    def step(self, log_probs: np.ndarray) -> np.ndarray:
        """Map the current iterate (log-probabilities) to the next one."""
        pass

    def run(self, start: np.ndarray) -> OracleResult:
        """
        Iterate from ``start`` until the L∞ change drops below tol or the cap.

        Args:
            start: Interior starting point (probabilities)

        Returns:
            OracleResult for this start
        """
        log_probs = np.log(np.asarray(start, dtype=np.float64))
        probs = np.exp(log_probs)
        converged = False
        iterations = 0
        for iterations in range(1, self.config.max_iterations + 1):
            next_log = self.step(log_probs)
            next_probs = np.exp(next_log)
            change = float(np.max(np.abs(next_probs - probs)))
            log_probs, probs = next_log, next_probs
            if change <= self.config.tol:
                converged = True
                break
        dist = TokenDist(log_probs)
        value = float(self.problem.value(dist.probs))
        return OracleResult(dist=dist, value=value, converged=converged, iterations=iterations)
