from typing import Optional

from analytics.theta_forward import COHERENCE_SIGMAS
from analytics.windows import ThetaEstimate, pooled_se
from filters.check_result import CheckResult


def theta_coherence_filter(estimate: ThetaEstimate, reference: ThetaEstimate, name: str = "theta-coherence",
                           absolute: Optional[float] = None) -> CheckResult:
    """
    2 つの θ の計算経路が一致するかをチェックするフィルター。

    許容値は合算標準誤差の 3 倍。absolute を与えた場合は固定の許容値を使う
    (推定量と解析値の比較など、標準誤差が依存を無視しているとき)。
    """
    diff = abs(estimate.value - reference.value)
    if absolute is not None:
        tolerance = absolute
    else:
        tolerance = COHERENCE_SIGMAS * pooled_se(estimate.std_error, reference.std_error) + 1e-12
    return CheckResult(name, diff, tolerance, diff <= tolerance,
                       f"{estimate.method.value}={estimate.value:.4f} {reference.method.value}={reference.value:.4f}")
