from .windows import (
    ThetaMethod,
    SpectralWindow,
    TailWindow,
    ThetaEstimate,
    WindowBatch,
    MCValue,
)
from .montecarlo import RatioMoments, run_sharded
from .samplers import WindowSampler, IIDSpectralSampler, MMASpectralSampler, RCARForwardSampler
from .functionals import (
    FunctionalKind,
    PointFunctional,
    WindowFunctional,
    TIME_CHANGE_BATTERY,
    indicator,
    zero_functional,
    parse_functional_manifest,
    load_functional_manifest,
)
from .mma_analytic import mma_spectral_window, mma_theta, mma_tail_constant, mma_theta_branch_form
from .rcar_analytic import rcar_forward_tail, rcar_theta_closed_form
from .theta_forward import theta_forward
from .cluster_size_law import ClusterSizeLaw, cluster_size_law
from .laplace_functional import LaplaceResult, laplace_functional
from .time_change import IdentityCheck, time_change_check, lag_reversal_check
from .linear_projection import Sided, linear_projection_theta, univariate_positive_theta
from .breiman import breiman_constant, extremal_index_limit

__all__ = [
    'ThetaMethod',
    'SpectralWindow',
    'TailWindow',
    'ThetaEstimate',
    'WindowBatch',
    'MCValue',
    'RatioMoments',
    'run_sharded',
    'WindowSampler',
    'IIDSpectralSampler',
    'MMASpectralSampler',
    'RCARForwardSampler',
    'FunctionalKind',
    'PointFunctional',
    'WindowFunctional',
    'TIME_CHANGE_BATTERY',
    'indicator',
    'zero_functional',
    'parse_functional_manifest',
    'load_functional_manifest',
    'mma_spectral_window',
    'mma_theta',
    'mma_tail_constant',
    'mma_theta_branch_form',
    'rcar_forward_tail',
    'rcar_theta_closed_form',
    'theta_forward',
    'ClusterSizeLaw',
    'cluster_size_law',
    'LaplaceResult',
    'laplace_functional',
    'IdentityCheck',
    'time_change_check',
    'lag_reversal_check',
    'Sided',
    'linear_projection_theta',
    'univariate_positive_theta',
    'breiman_constant',
    'extremal_index_limit',
]
