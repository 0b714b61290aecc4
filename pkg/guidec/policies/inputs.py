"""
Per-step inputs shared by the closed-form policies and their objectives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..config import config
from ..core import TokenDist
from ..errors import DimensionMismatch, InvalidConfiguration, MissingGuidanceInput


def _vector(values: Optional[Sequence[float]], size: int, name: str) -> Optional[np.ndarray]:
    if values is None:
        return None
    arr = np.array(values, dtype=np.float64)
    if arr.shape != (size,):
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected ({size},)")
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise InvalidConfiguration(f"{name} entries must be finite and nonnegative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GuidanceInputs:
    """
    Everything a decoding step may need besides the policy spec.

    Attributes:
        p_cond: P_G(·|s_t)
        p_uncond: P_G(·|s_t⁻), for classifier-free and KL-guided policies
        q_over_v: Q(s_t, a) / V(s_t) per action, for classifier guidance
        q_values: Q(s_t, a) per action, for the discriminative dynamic weight
        value: V(s_t), for the discriminative dynamic weight
    """
    p_cond: TokenDist
    p_uncond: Optional[TokenDist] = None
    q_over_v: Optional[np.ndarray] = None
    q_values: Optional[np.ndarray] = None
    value: Optional[float] = None

    def __post_init__(self):
        n = self.p_cond.size
        if self.p_uncond is not None and self.p_uncond.size != n:
            raise DimensionMismatch(
                f"p_uncond has size {self.p_uncond.size}, p_cond has {n}"
            )
        object.__setattr__(self, 'q_over_v', _vector(self.q_over_v, n, 'q_over_v'))
        object.__setattr__(self, 'q_values', _vector(self.q_values, n, 'q_values'))
        if self.value is not None and not 0.0 <= self.value <= 1.0 + 1e-12:
            raise InvalidConfiguration(f"V must lie in [0, 1], got {self.value}")

    @property
    def size(self) -> int:
        return self.p_cond.size

    @classmethod
    def from_values(
        cls,
        p_cond: TokenDist,
        q_values: Sequence[float],
        p_uncond: Optional[TokenDist] = None,
        value: Optional[float] = None
    ) -> GuidanceInputs:
        """
        Build inputs from raw Q(s, ·).

        V defaults to the base-rollout value Σ_a P_G(a|s) Q(s, a). Zero Q entries
        are floored before dividing; a zero V means every action is equally
        hopeless and the ratio is all ones.
        """
        q = np.asarray(q_values, dtype=np.float64)
        v = float(np.dot(p_cond.probs, q)) if value is None else float(value)
        v = min(max(v, 0.0), 1.0)
        if v <= 0.0:
            ratio = np.ones_like(q)
        else:
            ratio = np.maximum(q, config.q_floor) / v
        return cls(p_cond=p_cond, p_uncond=p_uncond, q_over_v=ratio, q_values=q, value=v)

    def require_uncond(self) -> TokenDist:
        if self.p_uncond is None:
            raise MissingGuidanceInput("This policy needs P_G(·|s⁻) (p_uncond)")
        return self.p_uncond

    def require_q_over_v(self) -> np.ndarray:
        if self.q_over_v is None:
            raise MissingGuidanceInput("This policy needs Q/V ratios (q_over_v)")
        return self.q_over_v

    def log_q_over_v(self) -> np.ndarray:
        """log(Q/V), with exact zeros floored at the configured Q floor."""
        return floored_log(self.require_q_over_v())

    def generative_log_ratio(self) -> np.ndarray:
        """log P_G(·|s) - log P_G(·|s⁻)."""
        return self.p_cond.log_probs - self.require_uncond().log_probs


def floored_log(ratios: np.ndarray) -> np.ndarray:
    ratios = np.asarray(ratios, dtype=np.float64)
    return np.log(np.where(ratios == 0.0, config.q_floor, ratios))
