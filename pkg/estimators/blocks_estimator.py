import numpy as np

from errors import EmptyEstimateError, InvalidParameterError
from models.path import PathMatrix
from analytics.windows import ThetaEstimate, ThetaMethod
from estimators.blocks import block_hit_frequency
from estimators.runs_estimator import SE_NOTE
from estimators.threshold import ThresholdSpec
from utils import print_status


def blocks_estimator(path: PathMatrix, threshold: ThresholdSpec, r: int, corrected: bool = False) -> ThetaEstimate:
    """
    blocks 推定量。k_n = floor(n/r) 個の互いに素なブロックのうち最大値が x を超える割合 p̂ を
    r·(k/n) で割る。末尾の不完全なブロックは捨てる。

    既定は p̂ / (r·k/n) そのもの。corrected=True では p̂ の代わりに -log(1 - p̂) を使う
    (ブロック内のクラスタ数を Poisson とみなす補正)。
    すべてのブロックが超過を含むときは 1 - p̂ を 1/(2 k_n) で置き換え、details["saturated"] を立てる。

    Raises:
        EmptyEstimateError: 超過を含むブロックがない
    """
    if r < 1 or r > path.n:
        raise InvalidParameterError(f"block length must satisfy 1 <= r <= n, got r={r}, n={path.n}")
    mask = threshold.exceedance_mask(path)
    k = int(np.sum(mask))
    hit, k_n = block_hit_frequency(mask, r)
    if hit == 0:
        raise EmptyEstimateError(f"none of the {k_n} blocks of length r={r} exceeds the threshold")

    scale = r * k / path.n
    se_hit = float(np.sqrt(hit * (1.0 - hit) / k_n))
    details = {"blocks": k_n, "r": r, "corrected": corrected, "block_hit_frequency": hit,
               "saturated": False, "se_note": SE_NOTE}
    if corrected:
        quiet = 1.0 - hit
        if quiet == 0:
            quiet = 0.5 / k_n
            details["saturated"] = True
        value = -np.log(quiet) / scale
        se = se_hit / (quiet * scale)
    else:
        value = hit / scale
        se = se_hit / scale

    clamped = not 0.0 <= value <= 1.0
    if clamped:
        print_status(f"blocks estimate {value:.4f} clamped to [0, 1]", "warning")
    details["clamped"] = clamped
    return ThetaEstimate(value=float(np.clip(value, 0.0, 1.0)), std_error=float(se), method=ThetaMethod.BLOCKS,
                         n_samples=k_n, details=details)
