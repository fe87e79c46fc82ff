from analytics.windows import ThetaEstimate
from filters.check_result import CheckResult

AGREEMENT_TOLERANCE = 0.05


def runs_blocks_agreement_filter(runs: ThetaEstimate, blocks: ThetaEstimate,
                                 tolerance: float = AGREEMENT_TOLERANCE) -> CheckResult:
    """
    runs 推定量と blocks 推定量の差が tolerance 以内かをチェックするフィルター。

    Args:
        runs (ThetaEstimate): runs 推定量
        blocks (ThetaEstimate): blocks 推定量
        tolerance (float): 許容する差

    Returns:
        CheckResult: statistic は |runs - blocks|
    """
    diff = abs(runs.value - blocks.value)
    return CheckResult("runs-vs-blocks", diff, tolerance, diff <= tolerance,
                       f"runs={runs.value:.4f} blocks={blocks.value:.4f}")
