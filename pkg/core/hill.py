from typing import NamedTuple, Tuple
import numpy as np
from scipy import stats

from errors import DegenerateThresholdError, InvalidParameterError


class KSResult(NamedTuple):
    statistic: float
    pvalue: float


def hill_estimator(values: np.ndarray, k: int) -> Tuple[float, float]:
    """
    Hill による裾指数 alpha の診断用推定 (上位 k 個の順序統計量)

    alpha_hat = k / sum_{i<=k} log(X_(i) / X_(k+1))

    Args:
        values (np.ndarray): 正の観測値
        k (int): 使用する順序統計量の数 (1 <= k < n)

    Returns:
        Tuple[float, float]: alpha_hat と漸近標準誤差 alpha_hat / sqrt(k)

    Raises:
        DegenerateThresholdError: 上位 k+1 個の順序統計量がすべて等しい
    """
    x = np.sort(np.asarray(values, dtype=float).reshape(-1))[::-1]
    n = len(x)
    if not 1 <= k < n:
        raise InvalidParameterError(f"Hill estimator needs 1 <= k < n, got k={k}, n={n}")
    if x[k] <= 0:
        raise InvalidParameterError("Hill estimator needs positive order statistics")
    h = np.mean(np.log(x[:k] / x[k]))
    if not h > 0:
        raise DegenerateThresholdError(f"the top {k + 1} order statistics are tied at {x[k]:g}; "
                                       f"Hill estimate undefined")
    alpha_hat = 1.0 / h
    return float(alpha_hat), float(alpha_hat / np.sqrt(k))


def pareto_ks_test(radii: np.ndarray, alpha: float) -> KSResult:
    """
    Pr(R > y) = y^{-alpha} (y >= 1) に対する Kolmogorov-Smirnov 検定
    """
    r = np.asarray(radii, dtype=float).reshape(-1)
    if len(r) == 0:
        raise InvalidParameterError("KS test needs at least one radius")
    res = stats.kstest(r, stats.pareto(b=alpha).cdf)
    return KSResult(float(res.statistic), float(res.pvalue))
