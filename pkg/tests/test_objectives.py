"""
Tests for the objectives the closed-form policies maximize.
"""

import math

import numpy as np
import pytest
from hypothesis import given

from guidec import GuidanceInputs, PolicyKind, PolicySpec, TokenDist, objective_value
from guidec.errors import DimensionMismatch, MissingGuidanceInput
from guidec.infotheory import cross_entropy, entropy, kl_divergence
from guidec.policies import (
    CrossEntropyPenaltyObjective,
    GreedyObjective,
    GuidedKLObjective,
    ObjectiveForm,
    TemperatureObjective,
    build_objective,
    classifier_free_policy,
    guided_distribution,
    informational_breakdown,
    temperature_policy,
)

from .strategies import distribution_pairs, distributions

P = TokenDist.from_probs([0.8, 0.2])
Q = TokenDist.from_probs([0.3, 0.7])


class TestObjectiveValues:
    """Test objective values at known points."""

    def test_temperature_one_at_anchor(self):
        """Test that J is zero when the candidate is the anchor at T = 1."""
        assert TemperatureObjective(P, 1.0)(P) == pytest.approx(0.0, abs=1e-12)

    def test_greedy_at_vertex(self):
        """Test J(one-hot at argmax) = log 0.8."""
        assert GreedyObjective(P)(TokenDist.one_hot(2, 0)) == pytest.approx(math.log(0.8))

    def test_guided_zero_lambda(self):
        """Test that λ = 0 leaves -KL(π || P_G)."""
        objective = GuidedKLObjective(P, np.array([1.0, -1.0]), 0.0)
        assert objective(Q) == pytest.approx(-kl_divergence(Q, P))

    def test_temperature_forms(self):
        """Test that the cross-entropy form is T times the entropy form."""
        for t in (0.25, 0.5, 2.0):
            ent = TemperatureObjective(P, t, ObjectiveForm.ENTROPY)(Q)
            ce = TemperatureObjective(P, t, ObjectiveForm.CROSS_ENTROPY)(Q)
            assert ce == pytest.approx(t * ent, abs=1e-10)

    def test_temperature_entropy_form_identity(self):
        """Test the entropy form equals -(1/T - 1)·H(π, P_G) - KL(π || P_G)."""
        t = 0.5
        expected = -(1 / t - 1) * cross_entropy(Q, P) - kl_divergence(Q, P)
        assert TemperatureObjective(P, t)(Q) == pytest.approx(expected, abs=1e-12)

    def test_penalty_forms_agree(self):
        """Test that both forms of the cross-entropy penalty give one value."""
        a = CrossEntropyPenaltyObjective(P, 1.5, ObjectiveForm.CROSS_ENTROPY)(Q)
        b = CrossEntropyPenaltyObjective(P, 1.5, ObjectiveForm.ENTROPY)(Q)
        assert a == pytest.approx(b, abs=1e-12)

    def test_dimension_mismatch(self):
        """Test that candidates must match the anchor size."""
        with pytest.raises(DimensionMismatch):
            GreedyObjective(P)(TokenDist.uniform(3))


class TestClosedFormsMaximize:
    """Test that each closed form scores at least as well as other candidates."""

    @given(distribution_pairs())
    def test_temperature(self, pair):
        """Test temperature sampling against a random candidate."""
        p, candidate = pair
        objective = TemperatureObjective(p, 0.5)
        assert objective(temperature_policy(p, 0.5)) >= objective(candidate) - 1e-12

    @given(distribution_pairs())
    def test_classifier_free(self, pair):
        """Test classifier-free guidance against the anchor and the reference."""
        p_cond, p_uncond = pair
        spec = PolicySpec(PolicyKind.CLASSIFIER_FREE, lam=2.0)
        inputs = GuidanceInputs(p_cond=p_cond, p_uncond=p_uncond)
        best = objective_value(spec, classifier_free_policy(p_cond, p_uncond, 2.0), inputs)
        for candidate in (p_cond, p_uncond, TokenDist.uniform(p_cond.size)):
            assert best >= objective_value(spec, candidate, inputs) - 1e-12

    @given(distributions())
    def test_greedy(self, p):
        """Test that no candidate beats the argmax vertex."""
        objective = GreedyObjective(p)
        vertex = TokenDist.one_hot(p.size, p.argmax())
        assert objective(vertex) >= objective(p) - 1e-12
        assert objective(vertex) >= objective(TokenDist.uniform(p.size)) - 1e-12


class TestBuildObjective:
    """Test building objectives from specs."""

    def test_missing_values(self):
        """Test that classifier guidance needs Q/V ratios."""
        spec = PolicySpec(PolicyKind.CLASSIFIER_GUIDANCE, lam=1.0)
        with pytest.raises(MissingGuidanceInput):
            build_objective(spec, GuidanceInputs(p_cond=P))

    def test_kinds(self):
        """Test that each kind maps to its objective class."""
        inputs = GuidanceInputs.from_values(P, [0.9, 0.3], p_uncond=Q)
        cases = {
            PolicySpec(PolicyKind.GREEDY): GreedyObjective,
            PolicySpec(PolicyKind.TEMPERATURE, temperature=2.0): TemperatureObjective,
            PolicySpec(PolicyKind.KL_GUIDED_TEMPERATURE, sigma=1.0):
                CrossEntropyPenaltyObjective,
            PolicySpec(PolicyKind.CLASSIFIER_GUIDANCE, lam=1.0): GuidedKLObjective,
            PolicySpec(PolicyKind.CLASSIFIER_FREE, lam=1.0): GuidedKLObjective,
        }
        for spec, cls in cases.items():
            objective = build_objective(spec, inputs)
            assert isinstance(objective, cls)
            assert objective.dimension == 2
            best = objective(guided_distribution(spec, inputs))
            assert best >= objective(TokenDist.uniform(2)) - 1e-12


class TestInformationalBreakdown:
    """Test the per-step information report."""

    def test_components(self):
        """Test entropy, cross entropy and KL of a candidate."""
        report = informational_breakdown(Q, GuidanceInputs(p_cond=P))
        assert report.entropy == pytest.approx(entropy(Q))
        assert report.cross_entropy == pytest.approx(cross_entropy(Q, P))
        assert report.kl_to_anchor == pytest.approx(kl_divergence(Q, P))
        assert report.mi_discriminative is None
        assert report.mi_generative is None

    def test_mutual_information_terms(self):
        """Test that available inputs produce both MI terms."""
        inputs = GuidanceInputs.from_values(P, [0.9, 0.3], p_uncond=Q)
        report = informational_breakdown(P, inputs)
        expected_gen = float(P.probs @ (P.log_probs - Q.log_probs))
        assert report.mi_generative == pytest.approx(expected_gen)
        assert report.mi_generative == pytest.approx(kl_divergence(P, Q))
        assert report.mi_discriminative is not None
