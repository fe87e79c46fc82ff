from dataclasses import dataclass, field
from typing import Optional
import numpy as np

from errors import EmptyEstimateError, InvalidParameterError
from core.hill import KSResult, pareto_ks_test
from core.norms import NormSpec, norm
from models.path import PathMatrix
from estimators.threshold import ThresholdSpec


@dataclass(frozen=True, eq=False)
class EmpiricalTailProcess:
    """
    超過時点 τ を起点とする窓 (X_{τ+s}/x, ..., X_{τ+t}/x) の集まり。

    Attributes:
        s (int): 窓の開始 (<= 0)
        t (int): 窓の終了 (>= 0)
        anchors (np.ndarray): 残った起点 (0 始まりの時点)
        windows (np.ndarray): (anchors, t-s+1, d) の x で割った窓
        anchor_norms (np.ndarray): ||X_τ|| / x
        level (float): 閾値 x
        dropped (int): 窓がパスからはみ出したため捨てた起点の数
        norm_spec (NormSpec): ノルムの種類
    """
    s: int
    t: int
    anchors: np.ndarray
    windows: np.ndarray
    anchor_norms: np.ndarray
    level: float
    dropped: int = 0
    norm_spec: NormSpec = field(default_factory=NormSpec.euclidean)

    @property
    def size(self) -> int:
        return int(len(self.anchors))

    def index(self, j: int) -> int:
        return j - self.s

    def spectral(self) -> np.ndarray:
        """||X_τ|| で割った窓。起点の座標のノルムはちょうど 1"""
        return self.windows / self.anchor_norms[:, None, None]

    def lag_norms(self, j: int, norm_spec: Optional[NormSpec] = None, spectral: bool = False) -> np.ndarray:
        """||X_{τ+j}|| / x (spectral=True なら / ||X_τ||)"""
        values = self.spectral() if spectral else self.windows
        return np.asarray(norm(values[:, self.index(j)], norm_spec or self.norm_spec)).reshape(self.size)

    def fraction_beyond(self, j: int, delta: float, norm_spec: Optional[NormSpec] = None) -> float:
        """||X_{τ+j}||/x > delta となる窓の割合"""
        return float(np.mean(self.lag_norms(j, norm_spec) > delta))

    def fraction_between(self, j: int, lower: float, upper: float, norm_spec: Optional[NormSpec] = None) -> float:
        """lower < ||X_{τ+j}||/||X_τ|| < upper となる窓の割合"""
        ratios = self.lag_norms(j, norm_spec, spectral=True)
        return float(np.mean((ratios > lower) & (ratios < upper)))

    def pareto_check(self, alpha: float) -> KSResult:
        return pareto_ks_test(self.anchor_norms, alpha)


def empirical_tail_process(path: PathMatrix, threshold: ThresholdSpec, s: int, t: int) -> EmpiricalTailProcess:
    """
    経験的な裾過程の窓を切り出す。

    Args:
        path (PathMatrix): 対象のパス
        threshold (ThresholdSpec): select_threshold 済みの閾値
        s (int): 窓の開始 (<= 0)
        t (int): 窓の終了 (>= 0)

    Returns:
        EmpiricalTailProcess: 残った起点ごとの窓

    Raises:
        EmptyEstimateError: 起点が 1 つも残らない
    """
    if not s <= 0 <= t:
        raise InvalidParameterError(f"window must satisfy s <= 0 <= t, got s={s}, t={t}")
    level = threshold.require_level()
    norms = path.norms(threshold.norm_spec)
    exceed = np.flatnonzero(norms > level)
    # 窓がパスの外に出る起点は捨てる
    anchors = exceed[(exceed + s >= 0) & (exceed + t <= path.n - 1)]
    if len(anchors) == 0:
        raise EmptyEstimateError(f"no exceedance anchors with a full window [{s}, {t}] "
                                 f"(exceedances={len(exceed)}, n={path.n})")
    offsets = np.arange(s, t + 1)
    windows = path.data[anchors[:, None] + offsets[None, :]] / level
    return EmpiricalTailProcess(s=s, t=t, anchors=anchors, windows=windows,
                                anchor_norms=norms[anchors] / level, level=level,
                                dropped=int(len(exceed) - len(anchors)), norm_spec=threshold.norm_spec)
