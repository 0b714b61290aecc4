"""
Closed-form decoding policies and the objectives they maximize.
"""

from .inputs import GuidanceInputs
from .closed_form import (
    DynamicWeight,
    classifier_free_policy,
    classifier_guidance_policy,
    discriminative_divergence,
    dynamic_lambda,
    dynamic_weight_of,
    episode_rng,
    greedy_policy,
    guided_distribution,
    kl_guided_policy,
    optimal_action,
    sample_action,
    sample_from_cdf,
    inverse_cdf,
    static_weight_policy,
    temperature_policy,
)
from .objectives import (
    CrossEntropyPenaltyObjective,
    GreedyObjective,
    GuidedKLObjective,
    InformationReport,
    Objective,
    ObjectiveForm,
    SelfReferentialObjective,
    TemperatureObjective,
    build_objective,
    informational_breakdown,
    objective_value,
)

__all__ = [
    'GuidanceInputs',
    'DynamicWeight',
    'greedy_policy',
    'temperature_policy',
    'dynamic_lambda',
    'static_weight_policy',
    'kl_guided_policy',
    'discriminative_divergence',
    'classifier_guidance_policy',
    'classifier_free_policy',
    'optimal_action',
    'guided_distribution',
    'dynamic_weight_of',
    'episode_rng',
    'sample_action',
    'sample_from_cdf',
    'inverse_cdf',
    'Objective',
    'ObjectiveForm',
    'GuidedKLObjective',
    'CrossEntropyPenaltyObjective',
    'TemperatureObjective',
    'GreedyObjective',
    'SelfReferentialObjective',
    'build_objective',
    'objective_value',
    'InformationReport',
    'informational_breakdown',
]
