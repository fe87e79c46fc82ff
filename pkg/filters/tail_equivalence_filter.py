from analytics.windows import MCValue
from filters.check_result import CheckResult

RELATIVE_TOLERANCE = 0.1


def tail_equivalence_filter(ratio: MCValue, expected: float,
                            relative: float = RELATIVE_TOLERANCE) -> CheckResult:
    """
    Pr(||X|| > x) / Pr(||ξ|| > x) が裾同値の定数 c の ±relative 以内かをチェックするフィルター。
    """
    deviation = abs(ratio.value / expected - 1.0)
    return CheckResult("tail-equivalence", deviation, relative, deviation <= relative,
                       f"ratio={ratio.value:.4f} expected={expected:.4f}")
