from .rng import RngStream, as_generator
from .radial import RadialLaw, pareto_quantile, sample_pareto
from .norms import NormKind, NormSpec, norm, operator_norm, OPERATOR_NORM_TOLERANCE
from .spectral import (
    SpectralMeasure,
    RVLaw,
    point_masses,
    uniform_sphere,
    pushforward,
    positive_unit,
    symmetric_unit,
    sample_rv_vector,
)
from .hill import hill_estimator, pareto_ks_test

__all__ = [
    'RngStream',
    'as_generator',
    'RadialLaw',
    'pareto_quantile',
    'sample_pareto',
    'NormKind',
    'NormSpec',
    'norm',
    'operator_norm',
    'OPERATOR_NORM_TOLERANCE',
    'SpectralMeasure',
    'RVLaw',
    'point_masses',
    'uniform_sphere',
    'pushforward',
    'positive_unit',
    'symmetric_unit',
    'sample_rv_vector',
    'hill_estimator',
    'pareto_ks_test',
]
