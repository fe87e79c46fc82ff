from .check_result import CheckResult
from .runs_blocks_agreement_filter import runs_blocks_agreement_filter
from .theta_coherence_filter import theta_coherence_filter
from .cluster_law_coherence_filter import cluster_law_coherence_filter
from .cluster_size_tv_filter import cluster_size_tv_filter
from .laplace_coherence_filter import laplace_coherence_filter
from .identity_filter import identity_filter
from .pareto_anchor_filter import pareto_anchor_filter
from .spectral_anchor_filter import spectral_anchor_filter
from .tail_equivalence_filter import tail_equivalence_filter
from .stream_independence_filter import stream_independence_filter

__all__ = [
    'CheckResult',
    'runs_blocks_agreement_filter',
    'theta_coherence_filter',
    'cluster_law_coherence_filter',
    'cluster_size_tv_filter',
    'laplace_coherence_filter',
    'identity_filter',
    'pareto_anchor_filter',
    'spectral_anchor_filter',
    'tail_equivalence_filter',
    'stream_independence_filter',
]
