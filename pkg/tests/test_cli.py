"""
Tests for the command-line interface.
"""

import csv
import json

import pytest

from guidec.__main__ import EXIT_INPUT_ERROR, EXIT_OK, main
from guidec.harness import CSV_COLUMNS

CORPUS = {
    'vocab': ['a', 'b', 'eos'],
    'eos': 'eos',
    'examples': [
        {'evidence': 'E1', 'tokens': ['a', 'b', 'eos']},
        {'evidence': 'E1', 'tokens': ['a', 'eos']},
        {'evidence': 'E2', 'tokens': ['b', 'b', 'eos']},
    ],
}


@pytest.fixture
def workspace(tmp_path):
    """A trained model and a scenario that uses it."""
    (tmp_path / 'corpus.json').write_text(json.dumps(CORPUS))
    code = main(['train', '--corpus', str(tmp_path / 'corpus.json'), '--order', '1',
                 '--alpha', '1.0', '--out', str(tmp_path / 'model.json')])
    assert code == EXIT_OK
    (tmp_path / 'scenario.json').write_text(json.dumps({
        'model': 'model.json',
        'evidence': 'E1',
        'rule': {'kind': 'contains_token', 'tokens': 'a'},
        'horizon': 4,
        'policy': {'kind': 'classifier_free', 'lambda': 1.5},
        'samples': 100,
        'seed': 0,
    }))
    return tmp_path


class TestCommands:
    """Test each subcommand end to end."""

    def test_train(self, workspace):
        """Test that train writes a loadable model file."""
        doc = json.loads((workspace / 'model.json').read_text())
        assert doc['order'] == 1
        assert sorted(doc['conditional']) == ['E1', 'E2']

    def test_decode(self, workspace):
        """Test that decode writes a trace ending in eos."""
        out = workspace / 'trace.json'
        code = main(['decode', '--scenario', str(workspace / 'scenario.json'),
                     '--seed', '5', '--out', str(out)])
        assert code == EXIT_OK
        trace = json.loads(out.read_text())
        assert trace['tokens'][-1] == 'eos'
        assert trace['seed'] == 5
        assert len(trace['steps']) <= 4

    def test_decode_stdout(self, workspace, capsys):
        """Test that decode prints to stdout by default."""
        assert main(['decode', '--scenario', str(workspace / 'scenario.json')]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)['horizon'] == 4

    def test_sweep(self, workspace):
        """Test that sweep writes one CSV row per value."""
        out = workspace / 'sweep.csv'
        code = main(['sweep', '--scenario', str(workspace / 'scenario.json'),
                     '--param', 'lambda', '--values', '0,1,3', '--samples', '50',
                     '--out', str(out)])
        assert code == EXIT_OK
        with open(out, newline='') as handle:
            rows = list(csv.reader(handle))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert [row[2] for row in rows[1:]] == ['0', '1', '3']
        assert all(row[8] == '50' for row in rows[1:])

    def test_verify(self, tmp_path):
        """Test that a passing suite exits with 0 and writes its report."""
        out = tmp_path / 'report.json'
        code = main(['verify', '--suite', 'identities', '--vocab-max', '6',
                     '--out', str(out)])
        assert code == EXIT_OK
        assert json.loads(out.read_text())['passed'] is True


class TestErrors:
    """Test exit codes for bad input."""

    def test_missing_scenario(self, tmp_path):
        """Test that a missing file is an input error."""
        code = main(['decode', '--scenario', str(tmp_path / 'nope.json')])
        assert code == EXIT_INPUT_ERROR

    def test_bad_parameter(self, workspace, capsys):
        """Test that sweeping a foreign hyperparameter is an input error."""
        code = main(['sweep', '--scenario', str(workspace / 'scenario.json'),
                     '--param', 'temperature', '--values', '1'])
        assert code == EXIT_INPUT_ERROR
        assert 'temperature' in capsys.readouterr().err

    def test_malformed_scenario(self, tmp_path):
        """Test that a scenario without required fields is an input error."""
        path = tmp_path / 'scenario.json'
        path.write_text(json.dumps({'model': 'model.json'}))
        assert main(['decode', '--scenario', str(path)]) == EXIT_INPUT_ERROR

    def test_unknown_suite(self):
        """Test that argparse rejects an unknown suite."""
        assert main(['verify', '--suite', 'everything']) == EXIT_INPUT_ERROR

    def test_no_command(self):
        """Test that a subcommand is required."""
        assert main([]) == EXIT_INPUT_ERROR

    def test_version(self, capsys):
        """Test that --version exits cleanly."""
        assert main(['--version']) == EXIT_OK
        assert 'guidec' in capsys.readouterr().out
