from analytics.laplace_functional import LaplaceResult
from analytics.theta_forward import COHERENCE_SIGMAS
from analytics.windows import pooled_se
from filters.check_result import CheckResult


def laplace_coherence_filter(result: LaplaceResult) -> CheckResult:
    """
    Laplace 汎関数の一般形と簡略形が一致するかをチェックするフィルター。
    簡略形が使えない汎関数 (消える半径 < 1) は一般形のみで合格とする。
    """
    name = f"laplace-coherence[{result.functional}]"
    if result.simplified is None:
        return CheckResult(name, 0.0, 0.0, True, "simplified form not applicable")
    diff = abs(result.general.value - result.simplified.value)
    tolerance = COHERENCE_SIGMAS * pooled_se(result.general.std_error, result.simplified.std_error) + 1e-12
    return CheckResult(name, diff, tolerance, diff <= tolerance,
                       f"general={result.general.value:.5f} simplified={result.simplified.value:.5f}")
