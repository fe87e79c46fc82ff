import numpy as np

from core.norms import norm
from estimators.empirical_tail_process import EmpiricalTailProcess
from filters.check_result import CheckResult

ANCHOR_TOLERANCE = 1e-12


def spectral_anchor_filter(process: EmpiricalTailProcess) -> CheckResult:
    """経験的スペクトル窓の起点座標がすべて単位ベクトルかをチェックするフィルター"""
    anchors = process.spectral()[:, process.index(0)]
    worst = float(np.max(np.abs(np.asarray(norm(anchors, process.norm_spec)) - 1.0)))
    return CheckResult("spectral-anchor-unit", worst, ANCHOR_TOLERANCE, worst <= ANCHOR_TOLERANCE,
                       f"windows={process.size}")
