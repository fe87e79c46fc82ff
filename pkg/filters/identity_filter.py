from analytics.time_change import IdentityCheck
from analytics.theta_forward import COHERENCE_SIGMAS
from filters.check_result import CheckResult


def identity_filter(check: IdentityCheck) -> CheckResult:
    """
    恒等式 (時間変換、ラグ反転、最大値の法則) の両辺が合算標準誤差の 3 倍以内かをチェックするフィルター。
    """
    tolerance = COHERENCE_SIGMAS * check.std_error + 1e-12
    return CheckResult(check.name, abs(check.difference), tolerance, check.agrees,
                       f"lhs={check.lhs.value:.5f} rhs={check.rhs.value:.5f}")
