"""
Tests for the verification suites.
"""

import json

import pytest

from guidec.errors import InvalidConfiguration
from guidec.harness import SUITES, VerifyConfig, VerifyReport, verify, write_report


class TestSuites:
    """Test each suite on reduced settings."""

    def test_identities(self):
        """Test that the algebraic identities hold."""
        report = verify('identities', VerifyConfig(identity_pairs=200))
        assert report.passed, [c for c in report.checks if not c.passed]
        assert len(report.checks) == 9

    def test_kl_positivity_is_strict(self):
        """Test that distinct pairs must clear Pinsker's bound, not merely zero."""
        report = verify('identities', VerifyConfig(identity_pairs=100))
        check = next(c for c in report.checks if c.name == 'KL(p||q) > 0 for p != q')
        assert check.passed
        assert check.worst >= 1.0
        assert check.tolerance > 0.0

    def test_theorems(self):
        """Test closed forms against the oracle on a few small instances."""
        cfg = VerifyConfig(trials=3, vocab_max=5, grid_trials=2, gradient_points=3)
        report = verify('theorems', cfg)
        assert report.passed, [c for c in report.checks if not c.passed]
        names = [c.name for c in report.checks]
        assert any(name.startswith('gradient: self_referential') for name in names)
        assert any('grid vs ascent' in name for name in names)

    def test_valuation(self):
        """Test exact values, Bellman consistency and Monte Carlo agreement."""
        cfg = VerifyConfig(valuation_trials=3, mc_trials=2, mc_samples=2000)
        report = verify('valuation', cfg)
        assert report.passed, [c for c in report.checks if not c.passed]
        names = [c.name for c in report.checks]
        assert 'Q(root, a) = enumeration from s ∪ a' in names

    def test_reproducible(self):
        """Test that a suite gives the same report twice."""
        cfg = VerifyConfig(identity_pairs=50)
        assert verify('identities', cfg).to_dict() == verify('identities', cfg).to_dict()

    def test_unknown_suite(self):
        """Test that only the named suites exist."""
        assert SUITES == ('theorems', 'identities', 'valuation')
        with pytest.raises(InvalidConfiguration):
            verify('everything')


class TestReport:
    """Test report bookkeeping."""

    def test_add(self):
        """Test pass and fail on both comparison directions."""
        report = VerifyReport('demo')
        assert report.add('small error', 1e-9, 1e-6).passed
        assert not report.add('large error', 1.0, 1e-6).passed
        assert report.add('enough hits', 99, 99, lower_is_better=False).passed
        assert not report.passed

    def test_write(self, tmp_path):
        """Test the JSON report file."""
        report = VerifyReport('demo')
        report.add('check', 0.0, 1e-6, 'detail')
        path = tmp_path / 'report.json'
        write_report(report, path)
        doc = json.loads(path.read_text())
        assert doc['suite'] == 'demo'
        assert doc['passed'] is True
        assert doc['checks'][0]['name'] == 'check'
