import numpy as np

from analytics.cluster_size_law import ClusterSizeLaw
from estimators.clusters import ClusterPartition, cluster_size_distribution, total_variation
from filters.check_result import CheckResult

TV_TOLERANCE = 0.1


def cluster_size_tv_filter(partition: ClusterPartition, law: ClusterSizeLaw,
                           tolerance: float = TV_TOLERANCE) -> CheckResult:
    """
    経験的なクラスターサイズ分布と解析的な κ の分布の全変動距離をチェックするフィルター。
    """
    size = len(law.kappa)
    empirical = cluster_size_distribution(partition, size)
    analytic = np.clip(law.kappa, 0.0, None)
    # 打ち切った質量は最後のサイズにまとめる
    analytic = analytic.copy()
    analytic[-1] += max(0.0, 1.0 - float(np.sum(analytic)))
    tv = total_variation(empirical, analytic)
    return CheckResult("cluster-size-tv", tv, tolerance, tv <= tolerance,
                       f"clusters={partition.count} mean_size={partition.mean_size():.3f}")
