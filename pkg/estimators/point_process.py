from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence
import numpy as np

from errors import InvalidParameterError
from models.path import PathMatrix
from estimators.blocks import block_counts
from estimators.threshold import ThresholdSpec

DISPERSION_SEGMENTS = 200


def dispersion_index(counts: np.ndarray) -> float:
    """分散 / 平均 (Poisson なら 1)"""
    counts = np.asarray(counts, dtype=float)
    mean = float(np.mean(counts))
    if len(counts) < 2 or mean == 0:
        return float("nan")
    return float(np.var(counts, ddof=1) / mean)


def segment_counts(hits: np.ndarray, segments: int) -> np.ndarray:
    """ブロック列を segments 個の等しい区間に分け、区間ごとのクラスタ数を数える (端数のブロックは捨てる)"""
    width = len(hits) // segments
    if width == 0:
        return np.zeros(0, dtype=np.int64)
    return np.asarray(hits[:width * segments], dtype=np.int64).reshape(segments, width).sum(axis=1)


@dataclass(frozen=True, eq=False)
class LevelSummary:
    """
    閾値 x·u での超過点過程の要約
    """
    u: float
    level: float
    exceedances: int
    clusters: int
    halves: List[int]
    quarters: List[int]
    dispersion: float
    dispersion_quarters: float
    marks: np.ndarray
    implied_theta: float
    rate_ratio: float = float("nan")

    def mark_mean_log(self) -> float:
        """log(||X_τ||/(x u)) の平均。Pareto(alpha) なら 1/alpha に近い"""
        if len(self.marks) == 0:
            return float("nan")
        return float(np.mean(np.log(self.marks)))

    def to_record(self) -> Dict[str, Any]:
        return {
            "u": self.u,
            "level": self.level,
            "exceedances": self.exceedances,
            "clusters": self.clusters,
            "halves": ";".join(str(c) for c in self.halves),
            "quarters": ";".join(str(c) for c in self.quarters),
            "dispersion": self.dispersion,
            "dispersion_quarters": self.dispersion_quarters,
            "implied_theta": self.implied_theta,
            "rate_ratio": self.rate_ratio,
            "mark_mean_log": self.mark_mean_log(),
        }


@dataclass(frozen=True, eq=False)
class CompoundPoissonSummary:
    r: int
    n_blocks: int
    levels: List[LevelSummary] = field(default_factory=list)

    def at(self, u: float) -> LevelSummary:
        for summary in self.levels:
            if summary.u == u:
                return summary
        raise InvalidParameterError(f"level u={u} was not summarized; levels are {[s.u for s in self.levels]}")

    def to_records(self) -> List[Dict[str, Any]]:
        return [dict(s.to_record(), r=self.r) for s in self.levels]


def point_process_summary(path: PathMatrix, threshold: ThresholdSpec, r: int,
                          levels: Sequence[float]) -> CompoundPoissonSummary:
    """
    閾値の倍率 u ごとに、超過点過程とクラスタ点過程を要約する。

    クラスタは長さ r のブロックで数える。rate_ratio は最初の u に対する C(u)/C(u_0) で、
    極限では u^{-alpha} (u_0 = 1 のとき)。implied_theta は -log(超過なしブロックの割合) / (r·k_u/n)。

    Args:
        path (PathMatrix): 対象のパス
        threshold (ThresholdSpec): select_threshold 済みの閾値
        r (int): ブロック長
        levels (Sequence[float]): 閾値に掛ける倍率 (>= 1)

    Returns:
        CompoundPoissonSummary: 倍率ごとの要約
    """
    if r < 1 or r > path.n:
        raise InvalidParameterError(f"block length must satisfy 1 <= r <= n, got r={r}, n={path.n}")
    if not levels:
        raise InvalidParameterError("point-process summary needs at least one level u")
    for u in levels:
        if not u >= 1.0:
            raise InvalidParameterError(f"levels must be >= 1 relative to the threshold, got u={u}")

    x = threshold.require_level()
    norms = path.norms(threshold.norm_spec)
    n_blocks = path.n // r
    summaries: List[LevelSummary] = []
    base_clusters = None
    for u in levels:
        level = x * u
        mask = norms > level
        exceedances = int(np.sum(mask))
        hits = block_counts(mask, r) > 0
        clusters = int(np.sum(hits))
        if base_clusters is None:
            base_clusters = clusters
        quiet = 1.0 - clusters / n_blocks if n_blocks else float("nan")
        if exceedances == 0 or not quiet > 0:
            implied = float("nan")
        else:
            implied = float(-np.log(quiet) / (r * exceedances / path.n))
        quarters = segment_counts(hits, 4)
        summaries.append(LevelSummary(
            u=float(u), level=level, exceedances=exceedances, clusters=clusters,
            halves=[int(c) for c in segment_counts(hits, 2)],
            quarters=[int(c) for c in quarters],
            dispersion=dispersion_index(segment_counts(hits, DISPERSION_SEGMENTS)),
            dispersion_quarters=dispersion_index(quarters),
            marks=norms[mask] / level, implied_theta=implied,
            rate_ratio=clusters / base_clusters if base_clusters else float("nan"),
        ))
    return CompoundPoissonSummary(r=r, n_blocks=n_blocks, levels=summaries)
