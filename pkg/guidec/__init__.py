"""
guidec: Guided Decoding as Dynamic Programming
==============================================

Closed-form decoding policies (greedy, temperature, KL-guided temperature,
classifier guidance, classifier-free guidance) derived as maximizers of
action-state value objectives, exact values for binary terminal rewards, and a
simplex oracle that certifies every closed form numerically.

License: MIT
Version: 0.1.0
"""

__version__ = '0.1.0'
__license__ = 'MIT'

# Core components
from .config import Config, LogLevel, config, logger
from .core import (
    DecodeState,
    EpisodeStep,
    EpisodeTrace,
    HKind,
    LambdaSource,
    PolicyKind,
    PolicySpec,
    QMode,
    Termination,
    TokenDist,
    Vocab,
    advance,
    legal_actions,
    strip_evidence,
)
from .errors import GuidecError

# Information theory
from .infotheory import cross_entropy, entropy, kl_divergence, log_normalize, pmi

# Models
from .models import LanguageModel, TabularLM, load_model, save_model, train_tabular

# Policies
from .policies import (
    GuidanceInputs,
    classifier_free_policy,
    classifier_guidance_policy,
    dynamic_lambda,
    greedy_policy,
    guided_distribution,
    kl_guided_policy,
    objective_value,
    temperature_policy,
)

# Values
from .valuation import (
    DiscriminatorRule,
    ValueTables,
    backward_induction,
    discriminate,
    enumerate_values,
    rollout_estimate,
)

# Oracle
from .oracle import (
    OracleConfig,
    SimplexProblem,
    gradient_check,
    maximize_exponentiated_gradient,
    maximize_grid,
)

# Harness
from .harness import (
    EpisodeRunner,
    MetricsRow,
    Scenario,
    compute_metrics,
    load_scenario,
    run_episode,
    sweep,
    verify,
)

__all__ = [
    # Core
    'Config',
    'LogLevel',
    'config',
    'logger',
    'GuidecError',
    'Vocab',
    'TokenDist',
    'DecodeState',
    'EpisodeStep',
    'EpisodeTrace',
    'PolicyKind',
    'PolicySpec',
    'QMode',
    'HKind',
    'LambdaSource',
    'Termination',
    'strip_evidence',
    'advance',
    'legal_actions',

    # Information theory
    'log_normalize',
    'entropy',
    'cross_entropy',
    'kl_divergence',
    'pmi',

    # Models
    'LanguageModel',
    'TabularLM',
    'train_tabular',
    'save_model',
    'load_model',

    # Policies
    'GuidanceInputs',
    'greedy_policy',
    'temperature_policy',
    'dynamic_lambda',
    'kl_guided_policy',
    'classifier_guidance_policy',
    'classifier_free_policy',
    'guided_distribution',
    'objective_value',

    # Values
    'DiscriminatorRule',
    'ValueTables',
    'discriminate',
    'backward_induction',
    'enumerate_values',
    'rollout_estimate',

    # Oracle
    'OracleConfig',
    'SimplexProblem',
    'maximize_exponentiated_gradient',
    'maximize_grid',
    'gradient_check',

    # Harness
    'Scenario',
    'load_scenario',
    'EpisodeRunner',
    'MetricsRow',
    'run_episode',
    'compute_metrics',
    'sweep',
    'verify',
]
