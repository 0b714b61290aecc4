"""
Tests for the information-theoretic primitives.
"""

import math

import numpy as np
import pytest
from hypothesis import given

from guidec import TokenDist, cross_entropy, entropy, kl_divergence, log_normalize, pmi
from guidec.errors import DimensionMismatch, NonFiniteInput
from guidec.infotheory import bernoulli_kl, expected_log_ratio

from .strategies import distribution_pairs, distributions

P = TokenDist.from_probs([0.8, 0.2])
UNIFORM = TokenDist.uniform(2)


class TestLogNormalize:
    """Test log-space normalization."""

    def test_equal_weights(self):
        """Test that equal weights give the uniform distribution."""
        assert np.allclose(log_normalize([0.0, 0.0]).probs, [0.5, 0.5])

    def test_squared_probabilities(self):
        """Test normalizing log 0.64 and log 0.04."""
        dist = log_normalize([math.log(0.64), math.log(0.04)])
        assert np.allclose(dist.probs, [0.941176, 0.058824], atol=1e-6)

    def test_large_weights(self):
        """Test that large equal weights do not overflow."""
        assert np.allclose(log_normalize([1000.0, 1000.0, 1000.0]).probs, 1.0 / 3.0)

    def test_shift_invariance(self):
        """Test that adding a constant leaves the result unchanged."""
        a = log_normalize([0.1, -2.0, 3.0])
        b = log_normalize([500.1, 498.0, 503.0])
        assert a.allclose(b, atol=1e-12)

    def test_non_finite(self):
        """Test that infinite and empty inputs are rejected."""
        with pytest.raises(NonFiniteInput):
            log_normalize([math.inf, 0.0])
        with pytest.raises(NonFiniteInput):
            log_normalize([])


class TestEntropies:
    """Test entropy, cross entropy and KL on known values."""

    def test_entropy_uniform(self):
        """Test H(uniform over 2) = ln 2."""
        assert entropy(UNIFORM) == pytest.approx(math.log(2))

    def test_entropy_one_hot(self):
        """Test that a point mass has zero entropy."""
        assert entropy(TokenDist.one_hot(3, 1)) == 0.0

    def test_entropy_example(self):
        """Test H([0.8, 0.2])."""
        assert entropy(P) == pytest.approx(0.500402, abs=1e-6)

    def test_cross_entropy_self(self):
        """Test H(p, p) = H(p)."""
        assert cross_entropy(P, P) == pytest.approx(0.500402, abs=1e-6)

    def test_cross_entropy_one_hot(self):
        """Test H(one-hot, uniform) = ln 2."""
        assert cross_entropy(TokenDist.one_hot(2, 0), UNIFORM) == pytest.approx(math.log(2))

    def test_cross_entropy_example(self):
        """Test H(uniform, [0.8, 0.2])."""
        assert cross_entropy(UNIFORM, P) == pytest.approx(0.916291, abs=1e-6)

    def test_kl_examples(self):
        """Test KL on known values."""
        assert kl_divergence(P, P) == 0.0
        assert kl_divergence(TokenDist.one_hot(2, 0), UNIFORM) == pytest.approx(math.log(2))
        assert kl_divergence(P, UNIFORM) == pytest.approx(0.192745, abs=1e-6)

    def test_dimension_mismatch(self):
        """Test that sizes must agree."""
        with pytest.raises(DimensionMismatch):
            kl_divergence(P, TokenDist.uniform(3))
        with pytest.raises(DimensionMismatch):
            cross_entropy(P, TokenDist.uniform(3))

    @given(distribution_pairs())
    def test_chain_identity(self, pair):
        """Test H(p, q) = H(p) + KL(p || q)."""
        p, q = pair
        assert cross_entropy(p, q) == pytest.approx(entropy(p) + kl_divergence(p, q), abs=1e-10)

    @given(distribution_pairs())
    def test_kl_nonnegative(self, pair):
        """Test Gibbs' inequality."""
        p, q = pair
        assert kl_divergence(p, q) >= 0.0
        if not p.allclose(q, atol=1e-6):
            assert kl_divergence(p, q) > 0.0

    @given(distributions())
    def test_kl_self_exactly_zero(self, p):
        """Test that rounding below zero is clamped for KL(p || p)."""
        assert kl_divergence(p, p) == 0.0

    @given(distributions())
    def test_entropy_bounds(self, p):
        """Test 0 <= H(p) <= ln n."""
        assert 0.0 <= entropy(p) <= math.log(p.size) + 1e-12


class TestPmi:
    """Test pointwise mutual information."""

    def test_value(self):
        """Test log 0.5 - log 0.25 = ln 2."""
        assert pmi(math.log(0.5), math.log(0.25)) == pytest.approx(math.log(2))

    def test_negative_allowed(self):
        """Test that pmi may be negative."""
        assert pmi(math.log(0.1), math.log(0.5)) < 0

    def test_non_finite(self):
        """Test that non-finite arguments are rejected."""
        with pytest.raises(NonFiniteInput):
            pmi(-math.inf, 0.0)


class TestHelpers:
    """Test Bernoulli KL and expected log ratios."""

    def test_bernoulli_kl(self):
        """Test equal and impossible Bernoulli pairs."""
        assert bernoulli_kl(0.5, 0.5) == 0.0
        assert bernoulli_kl(1.0, 0.0) == math.inf
        assert bernoulli_kl(1.0, 0.5) == pytest.approx(math.log(2))

    def test_expected_log_ratio(self):
        """Test E_p[g] ignores zero-mass entries."""
        p = TokenDist.from_probs([1.0, 0.0])
        assert expected_log_ratio(p, [2.0, -math.inf]) == 2.0
