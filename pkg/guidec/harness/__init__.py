"""
Episode decoding, metrics, sweeps and verification suites.
"""

from .scenario import Scenario, load_scenario, scenario_from_dict, two_step_scenario
from .runner import (
    CSV_COLUMNS,
    EpisodeRunner,
    MetricsRow,
    compute_metrics,
    format_csv,
    run_episode,
    sweep,
    write_csv,
)
from .verify import SUITES, CheckResult, VerifyConfig, VerifyReport, verify, write_report

__all__ = [
    'Scenario',
    'load_scenario',
    'scenario_from_dict',
    'two_step_scenario',
    'CSV_COLUMNS',
    'EpisodeRunner',
    'MetricsRow',
    'compute_metrics',
    'format_csv',
    'run_episode',
    'sweep',
    'write_csv',
    'SUITES',
    'CheckResult',
    'VerifyConfig',
    'VerifyReport',
    'verify',
    'write_report',
]
