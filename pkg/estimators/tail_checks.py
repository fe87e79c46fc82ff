from typing import Optional
import numpy as np

from errors import DegenerateThresholdError, InvalidParameterError
from core.norms import NormSpec, norm
from models.path import PathMatrix
from analytics.breiman import extremal_index_limit
from analytics.time_change import IdentityCheck
from analytics.windows import MCValue
from estimators.blocks import block_hit_frequency
from estimators.threshold import ThresholdSpec

INNOVATION_QUANTILE = 0.999


def tail_equivalence_ratio(path: PathMatrix, innovations: np.ndarray, level: Optional[float] = None,
                           quantile: float = INNOVATION_QUANTILE,
                           norm_spec: Optional[NormSpec] = None) -> MCValue:
    """
    Pr̂(||X|| > x) / Pr̂(||ξ|| > x)。x を省略するとイノベーションのノルムの quantile 分位点を使う。
    標準誤差は 2 つの二項比率のデルタ法 (系列依存は無視)。
    """
    norm_spec = norm_spec or NormSpec.euclidean()
    xi = np.asarray(innovations, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    xi_norms = np.asarray(norm(xi, norm_spec)).reshape(len(xi))
    if level is None:
        if not 0.0 < quantile < 1.0:
            raise InvalidParameterError(f"quantile must lie in (0, 1), got {quantile}")
        level = float(np.quantile(xi_norms, quantile))
    p_x = float(np.mean(path.norms(norm_spec) > level))
    p_xi = float(np.mean(xi_norms > level))
    if p_xi == 0:
        raise DegenerateThresholdError(f"no innovation exceeds the level {level:g}")
    ratio = p_x / p_xi
    rel_var = 0.0
    if p_x > 0:
        rel_var += (1.0 - p_x) / (p_x * path.n)
    rel_var += (1.0 - p_xi) / (p_xi * len(xi_norms))
    return MCValue(ratio, float(ratio * np.sqrt(rel_var)), path.n)


def maximum_law_check(path: PathMatrix, threshold: ThresholdSpec, r: int, theta: float, alpha: float,
                      theta_se: float = 0.0) -> IdentityCheck:
    """
    ブロック最大値の法則 Pr̂(M_r <= x) と極限 exp(-θ u^{-alpha}) の比較。
    u は r·Pr̂(||X|| > x) = u^{-alpha} となるように選ぶ。
    """
    mask = threshold.exceedance_mask(path)
    hit, k_n = block_hit_frequency(mask, r)
    quiet = 1.0 - hit
    intensity = r * float(np.sum(mask)) / path.n
    if not intensity > 0:
        raise DegenerateThresholdError("maximum-law check needs at least one exceedance")
    u = intensity ** (-1.0 / alpha)
    limit = extremal_index_limit(theta, u, alpha)
    lhs = MCValue(quiet, float(np.sqrt(quiet * (1.0 - quiet) / k_n)), k_n)
    rhs = MCValue(limit, float(limit * intensity * theta_se), 0)
    return IdentityCheck("maximum-law", lhs, rhs)
