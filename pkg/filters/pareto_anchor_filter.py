from estimators.empirical_tail_process import EmpiricalTailProcess
from filters.check_result import CheckResult

KS_LEVEL = 0.01


def pareto_anchor_filter(process: EmpiricalTailProcess, alpha: float, level: float = KS_LEVEL) -> CheckResult:
    """
    超過起点の半径 ||X_τ||/x が Pareto(alpha) に従うかを KS 検定でチェックするフィルター。
    statistic は p 値、tolerance は有意水準。
    """
    result = process.pareto_check(alpha)
    return CheckResult("anchor-pareto-ks", result.pvalue, level, result.pvalue >= level,
                       f"D={result.statistic:.4f} anchors={process.size}")
