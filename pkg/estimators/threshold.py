from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional
import numpy as np

from errors import DegenerateThresholdError, InvalidParameterError
from core.norms import NormSpec
from models.path import PathMatrix
from utils import print_status


class ThresholdMode(Enum):
    ORDER_STATISTIC = "k"
    QUANTILE = "quantile"


@dataclass(frozen=True)
class ThresholdSpec:
    """
    閾値の指定。order statistic (上位 k 個) か分位点 p。select_threshold で path に
    結びつけると level (= x) と exceedances (厳密な超過数) が埋まる。
    """
    mode: ThresholdMode
    k: Optional[int] = None
    p: Optional[float] = None
    norm_spec: NormSpec = field(default_factory=NormSpec.euclidean)
    level: Optional[float] = None
    exceedances: Optional[int] = None
    n: Optional[int] = None

    def __post_init__(self):
        if self.mode == ThresholdMode.ORDER_STATISTIC and (self.k is None or self.k < 1):
            raise InvalidParameterError(f"order-statistic threshold needs k >= 1, got k={self.k}")
        if self.mode == ThresholdMode.QUANTILE and (self.p is None or not 0.0 < self.p < 1.0):
            raise InvalidParameterError(f"quantile threshold needs 0 < p < 1, got p={self.p}")

    @staticmethod
    def order_statistic(k: int, norm_spec: Optional[NormSpec] = None) -> "ThresholdSpec":
        return ThresholdSpec(ThresholdMode.ORDER_STATISTIC, k=k, norm_spec=norm_spec or NormSpec.euclidean())

    @staticmethod
    def quantile(p: float, norm_spec: Optional[NormSpec] = None) -> "ThresholdSpec":
        return ThresholdSpec(ThresholdMode.QUANTILE, p=p, norm_spec=norm_spec or NormSpec.euclidean())

    @property
    def resolved(self) -> bool:
        return self.level is not None

    def require_level(self) -> float:
        if self.level is None:
            raise InvalidParameterError("threshold has not been bound to a path (call select_threshold)")
        return self.level

    def exceedance_mask(self, path: PathMatrix) -> np.ndarray:
        """||X_t|| > x (厳密な不等号)"""
        return path.norms(self.norm_spec) > self.require_level()


def select_threshold(path: PathMatrix, spec: ThresholdSpec) -> ThresholdSpec:
    """
    閾値を path に結びつける。x は ||X_t|| の (k+1) 番目に大きい値なので、同順位が
    なければちょうど k 個の厳密な超過が生じる。

    Args:
        path (PathMatrix): 対象のパス
        spec (ThresholdSpec): 閾値の指定

    Returns:
        ThresholdSpec: level と exceedances が埋まった指定

    Raises:
        InvalidParameterError: k >= n
        DegenerateThresholdError: 解決した閾値が正でない
    """
    n = path.n
    k = spec.k if spec.mode == ThresholdMode.ORDER_STATISTIC else int(round(n * (1.0 - float(spec.p or 0.0))))
    assert k is not None
    if k >= n:
        raise InvalidParameterError(f"threshold needs k < n, got k={k}, n={n}")
    if k < 1:
        raise InvalidParameterError(f"threshold quantile leaves no exceedances on n={n} (k={k})")
    if k >= n / 10:
        print_status(f"k={k} is not small relative to n={n} (k >= n/10); the tail approximation may be poor",
                     "warning")

    norms = path.norms(spec.norm_spec)
    # (k+1) 番目に大きい値
    level = float(np.partition(norms, n - k - 1)[n - k - 1])
    if not level > 0:
        raise DegenerateThresholdError(f"resolved threshold {level:g} is not positive")
    count = int(np.sum(norms > level))
    if count == 0:
        print_status(f"threshold {level:g} has no strict exceedances (ties at the threshold)", "warning")
    elif count != k:
        print_status(f"ties at the threshold: {count} strict exceedances instead of k={k}", "warning")
    return replace(spec, k=k, level=level, exceedances=count, n=n)
