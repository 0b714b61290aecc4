"""
Tests for scenarios, the episode runner, metrics and sweeps.
"""

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from guidec import (
    DecodeState,
    EpisodeStep,
    EpisodeTrace,
    PolicyKind,
    PolicySpec,
    TokenDist,
    advance,
)
from guidec.config import config
from guidec.errors import (
    EmptyTraceSet,
    InvalidConfiguration,
    MalformedModelFile,
    UnknownEvidenceId,
    UnknownParameter,
)
from guidec.harness import (
    CSV_COLUMNS,
    EpisodeRunner,
    Scenario,
    compute_metrics,
    format_csv,
    load_scenario,
    run_episode,
    scenario_from_dict,
    sweep,
    two_step_scenario,
)
from guidec.infotheory import entropy

SCENARIOS = Path(__file__).resolve().parent.parent / 'scenarios'


def _guidance(lam: float) -> PolicySpec:
    return PolicySpec(PolicyKind.CLASSIFIER_GUIDANCE, lam=lam)


class TestScenario:
    """Test scenario construction and files."""

    def test_load_model_scenario(self):
        """Test the bundled two-step scenario file."""
        scenario = load_scenario(SCENARIOS / 'two_step.json')
        assert scenario.horizon == 3
        assert scenario.evidence_id == 'E1'
        assert scenario.policy == _guidance(1.0)
        assert scenario.model_path == 'two_step_model.json'
        assert scenario.to_dict()['rule'] == {'kind': 'contains_token', 'tokens': ['a']}

    def test_load_corpus_scenario(self):
        """Test a scenario that trains its model on load."""
        scenario = load_scenario(SCENARIOS / 'attribution.json')
        assert scenario.lm.evidence_ids == ('cat_story', 'dog_story')
        assert scenario.policy.kind is PolicyKind.CLASSIFIER_FREE

    def test_default_seed(self, monkeypatch):
        """Test that a file without a seed takes the configured base seed."""
        monkeypatch.setattr(config, 'seed', 7)
        doc = {
            'model': 'two_step_model.json',
            'evidence': 'E1',
            'rule': {'kind': 'contains_token', 'tokens': 'a'},
            'horizon': 3,
            'policy': {'kind': 'greedy'},
        }
        assert scenario_from_dict(doc, SCENARIOS).seed == 7
        assert scenario_from_dict({**doc, 'seed': 2}, SCENARIOS).seed == 2

    def test_missing_fields(self, tmp_path):
        """Test that rule, horizon and policy are required."""
        with pytest.raises(MalformedModelFile):
            scenario_from_dict({'model': 'm.json'}, tmp_path)

    def test_unknown_evidence(self, two_step):
        """Test that the evidence must exist in the model."""
        with pytest.raises(UnknownEvidenceId):
            replace(two_step, evidence_id='E9')

    def test_bad_samples(self, two_step):
        """Test that at least one sample is required."""
        with pytest.raises(InvalidConfiguration):
            replace(two_step, samples=0)

    def test_prompt_range(self, two_step):
        """Test that prompt tokens must be in the vocabulary."""
        with pytest.raises(InvalidConfiguration):
            replace(two_step, prompt=(7,))


class TestRunEpisode:
    """Test single-episode decoding."""

    def test_greedy_deterministic(self):
        """Test that greedy decoding gives the same trace for every seed."""
        scenario = two_step_scenario(PolicySpec(PolicyKind.GREEDY))
        traces = [run_episode(scenario, seed) for seed in range(5)]
        assert all(t.actions == (0, 0, 2) for t in traces)
        assert all(t.terminal_reward == 1 for t in traces)

    def test_trace_shape(self, two_step):
        """Test horizon, forced eos and reward placement."""
        trace = run_episode(two_step, 3)
        assert len(trace.steps) == 3
        assert trace.steps[-1].forced
        assert trace.steps[-1].action == 2
        assert not any(step.forced for step in trace.steps[:-1])
        assert all(step.reward == 0 for step in trace.steps[:-1])
        assert trace.final_state.is_terminal

    def test_seeded(self, two_step):
        """Test that equal seeds reproduce the trace."""
        runner = EpisodeRunner(two_step)
        assert runner.run_episode(11).actions == runner.run_episode(11).actions

    def test_policy_over_vocabulary(self, two_step):
        """Test that step policies are full-vocabulary distributions."""
        trace = run_episode(two_step, 0)
        for step in trace.steps:
            assert step.policy.size == 3
            assert step.policy.probs.sum() == pytest.approx(1.0)

    def test_threads_match(self, two_step):
        """Test that threaded batches equal sequential ones."""
        scenario = replace(two_step, samples=50)
        sequential = EpisodeRunner(scenario, threads=1).run_many(50, 0)
        threaded = EpisodeRunner(scenario, threads=4).run_many(50, 0)
        assert [t.actions for t in sequential] == [t.actions for t in threaded]

    def test_strong_guidance(self):
        """Test that λ = 50 almost always satisfies the discriminator."""
        row = EpisodeRunner(two_step_scenario(_guidance(50.0), samples=2000)).evaluate()
        assert row.attribution_rate >= 0.999


class TestMetrics:
    """Test metric aggregation."""

    def _trace(self):
        s0 = DecodeState((), (), 2)
        s1 = advance(s0, 0)
        uniform = TokenDist.uniform(3)
        steps = (
            EpisodeStep(s0, 0, uniform, 0, (0, 1, 2)),
            EpisodeStep(s1, 2, uniform, 1, (0, 1, 2)),
        )
        return EpisodeTrace(steps, 1, 3, advance(s1, 2))

    def test_single_trace(self, two_step):
        """Test every metric on a hand-built trace."""
        row = compute_metrics([self._trace()], two_step.lm)
        assert row.attribution_rate == 1.0
        assert row.distinct_1 == 1.0
        assert row.distinct_2 == 1.0
        assert row.mean_loglik == pytest.approx(math.log(1 / 3))
        assert row.mean_policy_entropy == pytest.approx(math.log(3))
        assert row.n_samples == 1

    def test_identical_greedy_traces(self):
        """Test zero entropy and low distinctness for repeated outputs."""
        scenario = two_step_scenario(PolicySpec(PolicyKind.GREEDY))
        traces = EpisodeRunner(scenario).run_many(10, 0)
        row = compute_metrics(traces, scenario.lm)
        assert row.mean_policy_entropy == 0.0
        assert row.distinct_1 == pytest.approx(2 / 30)
        assert row.distinct_2 == pytest.approx(2 / 20)
        assert row.attribution_stderr == 0.0

    def test_forced_steps_excluded(self, two_step):
        """Test that only decision steps enter entropy and log-likelihood."""
        traces = EpisodeRunner(two_step).run_many(20, 0)
        row = compute_metrics(traces, two_step.lm)
        assert row.mean_policy_entropy == pytest.approx(math.log(2))
        assert row.mean_loglik == pytest.approx(math.log(1 / 3))

    def test_empty(self, two_step):
        """Test that at least one trace is needed."""
        with pytest.raises(EmptyTraceSet):
            compute_metrics([], two_step.lm)


class TestSweep:
    """Test hyperparameter sweeps and CSV output."""

    def test_singleton_matches_direct(self):
        """Test that a one-point sweep equals a direct evaluation."""
        scenario = two_step_scenario(samples=300)
        runner = EpisodeRunner(scenario)
        (row,) = runner.sweep('T', [1.0])
        direct = runner.evaluate()
        assert row.csv_fields()[3:] == direct.csv_fields()[3:]
        assert row.param == 'T'
        assert row.value == 1.0

    def test_inert_parameter(self):
        """Test that λ has no effect when conditional and marginal coincide."""
        scenario = two_step_scenario(PolicySpec(PolicyKind.CLASSIFIER_FREE, lam=0.0),
                                     samples=300)
        rows = sweep(scenario, 'lambda', [0.0, 1.0, 5.0], common_seeds=True)
        for row in rows[1:]:
            assert row.attribution_rate == rows[0].attribution_rate
            assert row.distinct_1 == rows[0].distinct_1
            assert row.distinct_2 == rows[0].distinct_2
            assert row.mean_policy_entropy == pytest.approx(rows[0].mean_policy_entropy)

    def test_guidance_strength(self):
        """Test attribution rises and entropy falls along λ within two standard errors."""
        scenario = two_step_scenario(_guidance(0.0), samples=2000)
        rows = EpisodeRunner(scenario).sweep('lambda', [0.0, 0.5, 1.0, 2.0, 4.0],
                                             common_seeds=True)
        attribution_slack = 2 * max(r.attribution_stderr for r in rows)
        entropy_slack = 2 * max(r.entropy_stderr for r in rows)
        for a, b in zip(rows, rows[1:]):
            assert b.attribution_rate >= a.attribution_rate - attribution_slack
            assert b.mean_policy_entropy <= a.mean_policy_entropy + entropy_slack
        assert rows[0].mean_policy_entropy == pytest.approx(math.log(2))
        assert rows[-1].mean_policy_entropy < 0.5

    def test_root_entropy_monotone(self):
        """Test that the first-step policy sharpens as λ grows."""
        runner = EpisodeRunner(two_step_scenario(_guidance(0.0)))
        entropies = [entropy(runner.run_episode(0, _guidance(lam)).steps[0].policy)
                     for lam in (0.0, 0.5, 1.0, 2.0, 4.0)]
        assert all(b <= a + 1e-12 for a, b in zip(entropies, entropies[1:]))

    def test_temperature_irrelevant_on_uniform(self):
        """Test that temperature does not change a uniform anchor."""
        rows = EpisodeRunner(two_step_scenario(samples=200)).sweep('T', [0.25, 0.5, 1.0])
        for row in rows:
            assert row.mean_policy_entropy == pytest.approx(math.log(2))

    def test_seed_derivation(self):
        """Test that point j runs with base_seed XOR j."""
        runner = EpisodeRunner(two_step_scenario(samples=20, seed=5))
        rows = runner.sweep('T', [1.0, 1.0, 1.0])
        assert [row.seed for row in rows] == [5, 4, 7]
        assert rows[1].csv_fields()[3:9] == runner.evaluate(seed=4).csv_fields()[3:9]

    def test_common_seeds(self):
        """Test that common seeding reuses the base seed at every point."""
        rows = EpisodeRunner(two_step_scenario(samples=20, seed=5)).sweep(
            'T', [1.0, 1.0, 1.0], common_seeds=True)
        assert [row.seed for row in rows] == [5, 5, 5]
        assert rows[0].csv_fields()[3:] == rows[2].csv_fields()[3:]

    def test_unknown_parameter(self, two_step):
        """Test that sweeping a foreign hyperparameter fails."""
        with pytest.raises(UnknownParameter):
            sweep(two_step, 'sigma', [1.0])

    def test_csv(self):
        """Test the header and byte-identical reruns."""
        scenario = two_step_scenario(_guidance(1.0), samples=200)
        first = format_csv(sweep(scenario, 'lambda', [0.0, 2.0]))
        second = format_csv(sweep(scenario, 'lambda', [0.0, 2.0]))
        assert first == second
        lines = first.split('\n')
        assert lines[0] == ','.join(CSV_COLUMNS)
        assert lines[1].startswith('classifier_guidance,lambda,0,')
        assert len(lines) == 4 and lines[-1] == ''


class TestScenarioFiles:
    """Test that scenario documents survive a JSON round trip."""

    def test_round_trip(self, tmp_path):
        """Test rebuilding a scenario from its own dictionary."""
        original = load_scenario(SCENARIOS / 'two_step.json')
        doc = original.to_dict()
        doc['model'] = str(SCENARIOS / 'two_step_model.json')
        path = tmp_path / 'scenario.json'
        path.write_text(json.dumps(doc))
        rebuilt = load_scenario(path)
        assert isinstance(rebuilt, Scenario)
        assert rebuilt.policy == original.policy
        assert rebuilt.rule == original.rule
        assert rebuilt.termination is original.termination
        assert np.array_equal(
            rebuilt.lm.next_dist(rebuilt.lm.initial_state((), 'E1')).log_probs,
            original.lm.next_dist(original.lm.initial_state((), 'E1')).log_probs,
        )
