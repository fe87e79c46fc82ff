from .threshold import ThresholdMode, ThresholdSpec, select_threshold
from .blocks import BlockRule, BlockSpec, block_counts, block_hit_frequency
from .empirical_tail_process import EmpiricalTailProcess, empirical_tail_process
from .runs_estimator import runs_estimator
from .blocks_estimator import blocks_estimator
from .clusters import Cluster, ClusterPartition, extract_clusters, cluster_size_distribution, total_variation
from .point_process import LevelSummary, CompoundPoissonSummary, point_process_summary, dispersion_index
from .anticluster import AnticlusterRow, anticluster_diagnostic
from .bootstrap import BootstrapResult, block_bootstrap_se
from .tail_checks import tail_equivalence_ratio, maximum_law_check

__all__ = [
    'ThresholdMode',
    'ThresholdSpec',
    'select_threshold',
    'BlockRule',
    'BlockSpec',
    'block_counts',
    'block_hit_frequency',
    'EmpiricalTailProcess',
    'empirical_tail_process',
    'runs_estimator',
    'blocks_estimator',
    'Cluster',
    'ClusterPartition',
    'extract_clusters',
    'cluster_size_distribution',
    'total_variation',
    'LevelSummary',
    'CompoundPoissonSummary',
    'point_process_summary',
    'dispersion_index',
    'AnticlusterRow',
    'anticluster_diagnostic',
    'BootstrapResult',
    'block_bootstrap_se',
    'tail_equivalence_ratio',
    'maximum_law_check',
]
