from dataclasses import dataclass
from typing import Any, Dict, List, Sequence
import numpy as np

from errors import EmptyEstimateError, InvalidParameterError
from models.path import PathMatrix
from estimators.blocks import window_counts
from estimators.threshold import ThresholdSpec


@dataclass(frozen=True)
class AnticlusterRow:
    m: int
    probability: float
    std_error: float
    anchors: int

    def to_record(self) -> Dict[str, Any]:
        return {"m": self.m, "probability": self.probability, "std_error": self.std_error, "anchors": self.anchors}


def anticluster_diagnostic(path: PathMatrix, threshold: ThresholdSpec, m_list: Sequence[int],
                           r: int) -> List[AnticlusterRow]:
    """
    Pr̂(max_{m<=|t|<=r} ||X_t|| > x | ||X_0|| > x) を m ごとに求める。

    起点 τ は [τ-r, τ+r] がパスに収まるものだけを使う。すべての m で同じ起点集合なので、
    表は m について (標本上) 単調非増加になる。
    """
    ms = [int(m) for m in m_list]
    if not ms:
        raise InvalidParameterError("anti-clustering table needs at least one m")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise InvalidParameterError(f"m_list must be strictly increasing, got {ms}")
    if ms[0] < 1 or ms[-1] > r:
        raise InvalidParameterError(f"m_list must lie in [1, r={r}], got {ms}")

    mask = threshold.exceedance_mask(path)
    exceed = np.flatnonzero(mask)
    anchors = exceed[(exceed - r >= 0) & (exceed + r <= path.n - 1)]
    if len(anchors) == 0:
        raise EmptyEstimateError(f"no exceedance anchor with a full two-sided window of radius r={r}")

    rows: List[AnticlusterRow] = []
    for m in ms:
        ahead = window_counts(mask, anchors + m, anchors + r + 1)
        behind = window_counts(mask, anchors - r, anchors - m + 1)
        p = float(np.mean((ahead + behind) > 0))
        rows.append(AnticlusterRow(m=m, probability=p, std_error=float(np.sqrt(p * (1.0 - p) / len(anchors))),
                                   anchors=int(len(anchors))))
    return rows
