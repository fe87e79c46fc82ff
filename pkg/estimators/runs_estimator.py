import numpy as np

from errors import EmptyEstimateError, InvalidParameterError
from models.path import PathMatrix
from analytics.windows import ThetaEstimate, ThetaMethod
from estimators.blocks import block_hit_frequency, window_counts
from estimators.threshold import ThresholdSpec
from utils import print_status

SE_NOTE = "binomial, ignores serial dependence"


def runs_estimator(path: PathMatrix, threshold: ThresholdSpec, r: int, corrected: bool = False) -> ThetaEstimate:
    """
    runs 推定量。超過時点 τ のうち max_{1<=j<=r} ||X_{τ+j}|| <= x となるものの割合。

    既定ではこの割合をそのまま返す。r·k/n が小さくないとき割合は θ·Pr(M_r <= x) に近づくので、
    corrected=True では互いに素なブロックでの超過なし頻度 Pr̂(M_r <= x) で割る。

    Args:
        path (PathMatrix): 対象のパス
        threshold (ThresholdSpec): select_threshold 済みの閾値
        r (int): 先読みの長さ (BlockSpec から)
        corrected (bool): ブロックの超過なし頻度で割るか

    Returns:
        ThetaEstimate: method=runs。[0, 1] に切り詰めた場合は details["clamped"] が True

    Raises:
        EmptyEstimateError: τ + r <= n となる起点がない
    """
    if r < 1:
        raise InvalidParameterError(f"run length must be >= 1, got r={r}")
    mask = threshold.exceedance_mask(path)
    exceed = np.flatnonzero(mask)
    anchors = exceed[exceed + r <= path.n - 1]
    if len(anchors) == 0:
        raise EmptyEstimateError(f"no exceedance anchor leaves room for a run of length r={r} (n={path.n})")

    following = window_counts(mask, anchors + 1, anchors + r + 1)
    raw = float(np.mean(following == 0))
    se = float(np.sqrt(raw * (1.0 - raw) / len(anchors)))
    details = {"anchors": int(len(anchors)), "r": r, "corrected": corrected, "se_note": SE_NOTE}

    value = raw
    if corrected:
        hit, k_n = block_hit_frequency(mask, r)
        quiet = 1.0 - hit
        if not quiet > 0:
            raise EmptyEstimateError(f"every one of the {k_n} blocks of length r={r} has an exceedance; "
                                     f"the runs correction is undefined")
        value, se = raw / quiet, se / quiet
        details["block_quiet_frequency"] = quiet

    clamped = not 0.0 <= value <= 1.0
    if clamped:
        print_status(f"runs estimate {value:.4f} clamped to [0, 1]", "warning")
    details["clamped"] = clamped
    return ThetaEstimate(value=float(np.clip(value, 0.0, 1.0)), std_error=se, method=ThetaMethod.RUNS,
                         n_samples=int(len(anchors)), details=details)
