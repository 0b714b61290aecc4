"""
Simplex oracle: independent numerical maximizers of the policy objectives.
"""

from .optimizer import OracleConfig, OracleResult, SimplexOptimizer, SimplexProblem
from .exponentiated import ExponentiatedGradient, maximize_exponentiated_gradient
from .grid import maximize_grid, simplex_lattice
from .gradcheck import gradient_check
from .alternating import AlternatingResult, maximize_self_referential

__all__ = [
    'OracleConfig',
    'OracleResult',
    'SimplexOptimizer',
    'SimplexProblem',
    'ExponentiatedGradient',
    'maximize_exponentiated_gradient',
    'maximize_grid',
    'simplex_lattice',
    'gradient_check',
    'AlternatingResult',
    'maximize_self_referential',
]
