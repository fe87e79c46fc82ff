from dataclasses import dataclass
from typing import List, Sequence
import numpy as np

from errors import InvalidParameterError
from models.path import PathMatrix
from estimators.threshold import ThresholdSpec


@dataclass(frozen=True, eq=False)
class Cluster:
    """
    超過を 1 つ以上含むブロック

    Attributes:
        block (int): ブロック番号 (0 始まり)
        times (np.ndarray): ブロック内の超過時点 (0 始まりのパス上の時点)
        points (np.ndarray): X_τ / x
    """
    block: int
    times: np.ndarray
    points: np.ndarray

    @property
    def size(self) -> int:
        return int(len(self.times))


@dataclass(frozen=True, eq=False)
class ClusterPartition:
    """
    長さ r の互いに素な連続ブロックによる超過のクラスタ分け。末尾の不完全なブロックは含まない。
    """
    clusters: List[Cluster]
    level: float
    r: int
    n_blocks: int

    @property
    def count(self) -> int:
        return len(self.clusters)

    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.clusters], dtype=np.int64)

    def mean_size(self) -> float:
        if not self.clusters:
            return float("nan")
        return float(np.mean(self.sizes()))

    def modal_size(self) -> int:
        if not self.clusters:
            return 0
        return int(np.argmax(np.bincount(self.sizes())))


def extract_clusters(path: PathMatrix, threshold: ThresholdSpec, r: int) -> ClusterPartition:
    """
    パスを長さ r のブロックに分け、超過を含むブロックをクラスタとして返す。

    Args:
        path (PathMatrix): 対象のパス
        threshold (ThresholdSpec): select_threshold 済みの閾値
        r (int): ブロック長

    Returns:
        ClusterPartition: クラスタの一覧 (点は X_τ/x)
    """
    if r < 1:
        raise InvalidParameterError(f"block length must be >= 1, got r={r}")
    level = threshold.require_level()
    n_blocks = path.n // r
    mask = threshold.exceedance_mask(path)[:n_blocks * r]
    times = np.flatnonzero(mask)
    blocks = times // r
    clusters: List[Cluster] = []
    if len(times):
        starts = np.flatnonzero(np.r_[True, blocks[1:] != blocks[:-1]])
        for lo, hi in zip(starts, np.r_[starts[1:], len(times)]):
            member = times[lo:hi]
            clusters.append(Cluster(block=int(blocks[lo]), times=member, points=path.data[member] / level))
    return ClusterPartition(clusters=clusters, level=level, r=r, n_blocks=n_blocks)


def cluster_size_distribution(partition: ClusterPartition, max_size: int) -> np.ndarray:
    """
    経験的な Pr(κ = k), k = 1..max_size。max_size を超えるサイズは最後の要素にまとめる。
    """
    if max_size < 1:
        raise InvalidParameterError(f"max_size must be >= 1, got {max_size}")
    sizes = partition.sizes()
    if len(sizes) == 0:
        return np.zeros(max_size)
    counts = np.bincount(np.minimum(sizes, max_size), minlength=max_size + 1)[1:]
    return counts / float(len(sizes))


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    """有限台の 2 つの分布の全変動距離。短い方は 0 で埋める"""
    a = np.asarray(p, dtype=float)
    b = np.asarray(q, dtype=float)
    size = max(len(a), len(b))
    a = np.pad(a, (0, size - len(a)))
    b = np.pad(b, (0, size - len(b)))
    return 0.5 * float(np.sum(np.abs(a - b)))
