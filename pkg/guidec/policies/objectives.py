"""
Action-state value objectives J(π) whose maximizers are the closed-form policies.

Objectives evaluate on raw probability arrays along the last axis so the
simplex oracle can score whole lattices at once; ``__call__`` takes a TokenDist.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ..core import PolicyKind, PolicySpec, TokenDist
from ..errors import DimensionMismatch, MissingGuidanceInput
from ..infotheory import (
    cross_entropy,
    cross_entropy_array,
    entropy,
    entropy_array,
    expected_log_ratio,
    kl_array,
    kl_divergence,
)
from .closed_form import dynamic_weight_of
from .inputs import GuidanceInputs

_LOG_FLOOR = 1e-300


def _safe_log(probs: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(probs, _LOG_FLOOR))


class ObjectiveForm(Enum):
    """Algebraic form of the temperature-family objectives."""
    ENTROPY = "entropy"
    CROSS_ENTROPY = "cross_entropy"


class Objective(ABC):
    """Abstract base class for objectives over the probability simplex."""

    name = "objective"

    def __init__(self, anchor: TokenDist):
        """
        Initialize with the anchor distribution P_G(·|s).

        Args:
            anchor: Anchor distribution; must have full support
        """
        self.anchor = anchor
        self.log_anchor = anchor.log_probs
        self.anchor_probs = anchor.probs

    @property
    def dimension(self) -> int:
        return self.anchor.size

    @abstractmethod
    def value(self, probs: np.ndarray) -> np.ndarray:
        """J evaluated along the last axis of ``probs``."""
        pass

    @abstractmethod
    def gradient(self, probs: np.ndarray) -> np.ndarray:
        """Analytic ∇J at an interior point."""
        pass

    def __call__(self, candidate: TokenDist) -> float:
        if candidate.size != self.dimension:
            raise DimensionMismatch(
                f"Candidate has size {candidate.size}, objective {self.dimension}"
            )
        return float(self.value(candidate.probs))

    def _kl(self, probs: np.ndarray) -> np.ndarray:
        return kl_array(probs, self.anchor_probs)

    def _kl_gradient(self, probs: np.ndarray) -> np.ndarray:
        return _safe_log(probs) - self.log_anchor + 1.0

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.dimension})"


class GuidedKLObjective(Objective):
    """
    λ·E_π[g] - D_KL(π || P_G) for a per-action guidance vector g.

    With g = log Q/V this is classifier guidance; with
    g = log P_G(·|s) - log P_G(·|s⁻) it is classifier-free guidance. E_π[g] is
    the approximate mutual information term.
    """

    def __init__(self, anchor: TokenDist, guidance: np.ndarray, lam: float, name: str = "guided"):
        super().__init__(anchor)
        self.guidance = np.asarray(guidance, dtype=np.float64)
        if self.guidance.shape != (self.dimension,):
            raise DimensionMismatch("Guidance vector must match the anchor size")
        self.lam = float(lam)
        self.name = name

    def value(self, probs: np.ndarray) -> np.ndarray:
        return self.lam * np.sum(probs * self.guidance, axis=-1) - self._kl(probs)

    def gradient(self, probs: np.ndarray) -> np.ndarray:
        return self.lam * self.guidance - self._kl_gradient(probs)


class CrossEntropyPenaltyObjective(Objective):
    """
    -w·H(π, P_G) - D_KL(π || P_G), maximized by π ∝ P_G^(w+1).

    The ENTROPY form evaluates the same value as -(w+1)·D_KL(π||P_G) - w·H(π).
    """

    def __init__(
        self,
        anchor: TokenDist,
        weight: float,
        form: ObjectiveForm = ObjectiveForm.CROSS_ENTROPY,
        name: str = "kl_guided_temperature"
    ):
        super().__init__(anchor)
        self.weight = float(weight)
        self.form = ObjectiveForm(form)
        self.name = name

    def value(self, probs: np.ndarray) -> np.ndarray:
        if self.form is ObjectiveForm.ENTROPY:
            return -(self.weight + 1.0) * self._kl(probs) - self.weight * entropy_array(probs)
        return -self.weight * cross_entropy_array(probs, self.log_anchor) - self._kl(probs)

    def gradient(self, probs: np.ndarray) -> np.ndarray:
        return self.weight * self.log_anchor - self._kl_gradient(probs)


class TemperatureObjective(Objective):
    """
    Temperature sampling objective.

    ENTROPY form: -{(1/T)·D_KL(π||P_G) + (1/T - 1)·H(π)}, equal in value to
    -(1/T - 1)·H(π, P_G) - D_KL(π||P_G).
    CROSS_ENTROPY form: -{T·D_KL(π||P_G) + (1 - T)·H(π, P_G)}, which is T times
    the ENTROPY form and so shares its maximizer.
    """

    name = "temperature"

    def __init__(
        self,
        anchor: TokenDist,
        temperature: float,
        form: ObjectiveForm = ObjectiveForm.ENTROPY
    ):
        super().__init__(anchor)
        self.temperature = float(temperature)
        self.form = ObjectiveForm(form)

    def value(self, probs: np.ndarray) -> np.ndarray:
        t = self.temperature
        if self.form is ObjectiveForm.ENTROPY:
            return -(1.0 / t) * self._kl(probs) - (1.0 / t - 1.0) * entropy_array(probs)
        return -(t * self._kl(probs) + (1.0 - t) * cross_entropy_array(probs, self.log_anchor))

    def gradient(self, probs: np.ndarray) -> np.ndarray:
        t = self.temperature
        if self.form is ObjectiveForm.ENTROPY:
            entropy_grad = -(_safe_log(probs) + 1.0)
            return -(1.0 / t) * self._kl_gradient(probs) - (1.0 / t - 1.0) * entropy_grad
        return -(t * self._kl_gradient(probs) - (1.0 - t) * self.log_anchor)


class GreedyObjective(Objective):
    """-H(π, P_G) = E_π log P_G; linear in π, maximized at the argmax vertex."""

    name = "greedy"

    def value(self, probs: np.ndarray) -> np.ndarray:
        return -cross_entropy_array(probs, self.log_anchor)

    def gradient(self, probs: np.ndarray) -> np.ndarray:
        return np.array(self.log_anchor, dtype=np.float64)


class SelfReferentialObjective(Objective):
    """
    λ·D_KL(π || r) - D_KL(π || P_G) with r standing in for π(·|s⁻).

    This is the classifier-free objective after replacing P_G by π inside the
    guidance term. It has no closed-form maximizer and is only explored with
    the simplex oracle.
    """

    name = "self_referential"

    def __init__(self, anchor: TokenDist, reference: TokenDist, lam: float):
        super().__init__(anchor)
        if reference.size != anchor.size:
            raise DimensionMismatch("Reference and anchor sizes differ")
        self.reference = reference
        self.lam = float(lam)

    def value(self, probs: np.ndarray) -> np.ndarray:
        return self.lam * kl_array(probs, self.reference.probs) - self._kl(probs)

    def gradient(self, probs: np.ndarray) -> np.ndarray:
        log_pi = _safe_log(probs)
        return self.lam * (log_pi - self.reference.log_probs + 1.0) - self._kl_gradient(probs)


def build_objective(
    spec: PolicySpec,
    inputs: GuidanceInputs,
    form: ObjectiveForm = ObjectiveForm.ENTROPY
) -> Objective:
    """
    The objective whose argmax is the policy described by ``spec``.

    ``form`` selects the algebraic form of the temperature objectives.

    Raises:
        MissingGuidanceInput: If ``inputs`` lacks what the objective needs
    """
    anchor = inputs.p_cond
    kind = spec.kind
    if kind is PolicyKind.GREEDY:
        return GreedyObjective(anchor)
    if kind is PolicyKind.TEMPERATURE:
        return TemperatureObjective(anchor, spec.temperature, form)
    if kind is PolicyKind.KL_GUIDED_TEMPERATURE:
        weight = dynamic_weight_of(spec, inputs)
        return CrossEntropyPenaltyObjective(anchor, weight.lam, form)
    if kind is PolicyKind.CLASSIFIER_GUIDANCE:
        return GuidedKLObjective(anchor, inputs.log_q_over_v(), spec.lam, "classifier_guidance")
    return GuidedKLObjective(anchor, inputs.generative_log_ratio(), spec.lam, "classifier_free")


def objective_value(
    spec: PolicySpec,
    candidate: TokenDist,
    inputs: GuidanceInputs,
    form: ObjectiveForm = ObjectiveForm.ENTROPY
) -> float:
    """Score a candidate next-token distribution under the objective of ``spec.kind``."""
    return build_objective(spec, inputs, form)(candidate)


@dataclass(frozen=True)
class InformationReport:
    """Information-theoretic components of a candidate policy at one step."""
    entropy: float
    cross_entropy: float
    kl_to_anchor: float
    mi_discriminative: Optional[float] = None
    mi_generative: Optional[float] = None


def informational_breakdown(candidate: TokenDist, inputs: GuidanceInputs) -> InformationReport:
    """
    Decompose a candidate into the terms the objectives trade off.

    The approximate mutual information terms are reported when the inputs carry
    Q/V ratios (discriminative) or P_G(·|s⁻) (generative).
    """
    anchor = inputs.p_cond
    mi_disc = None
    mi_gen = None
    try:
        mi_disc = expected_log_ratio(candidate, inputs.log_q_over_v())
    except MissingGuidanceInput:
        pass
    try:
        mi_gen = expected_log_ratio(candidate, inputs.generative_log_ratio())
    except MissingGuidanceInput:
        pass
    return InformationReport(
        entropy=entropy(candidate),
        cross_entropy=cross_entropy(candidate, anchor),
        kl_to_anchor=kl_divergence(candidate, anchor),
        mi_discriminative=mi_disc,
        mi_generative=mi_gen,
    )
