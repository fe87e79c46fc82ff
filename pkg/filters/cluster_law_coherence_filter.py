from analytics.cluster_size_law import ClusterSizeLaw
from analytics.theta_forward import COHERENCE_SIGMAS
from filters.check_result import CheckResult


def cluster_law_coherence_filter(law: ClusterSizeLaw) -> CheckResult:
    """
    Pr(ν = 0) から得た θ と前向き公式の θ が一致するかをチェックするフィルター。
    """
    reference = law.details.get("theta_reference")
    reference_se = float(law.details.get("theta_reference_se", 0.0))
    if reference is None:
        return CheckResult("cluster-law-coherence", float("nan"), float("nan"), False,
                           "no reference theta was computed")
    diff = abs(law.theta - float(reference))
    tolerance = COHERENCE_SIGMAS * (law.theta_se ** 2 + reference_se ** 2) ** 0.5 + 1e-12
    return CheckResult("cluster-law-coherence", diff, tolerance, diff <= tolerance,
                       f"nu0={law.theta:.4f} forward={float(reference):.4f}")
