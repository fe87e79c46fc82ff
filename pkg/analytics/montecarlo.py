from dataclasses import dataclass, field
from typing import Callable, List, Tuple
import numpy as np

from errors import InvalidParameterError
from core.rng import RngStream
from utils import parallel_map

DEFAULT_SHARDS = 16
BATCH_SIZE = 65536

# (stream, size) -> (a: (size, k), b: (size,))
Kernel = Callable[[RngStream, int], Tuple[np.ndarray, np.ndarray]]


@dataclass
class RatioMoments:
    """
    E[a_j] / E[b] 型の比推定のための累積モーメント。

    a は k 成分のベクトル、b はスカラー (重み)。シャード間の merge は和なので結合的で、
    シャード順に merge すればワーカー数によらず同じビット列になる。
    """
    k: int
    count: int = 0
    sum_b: float = 0.0
    sum_bb: float = 0.0
    sum_a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sum_aa: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sum_ab: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.sum_a.size == 0:
            self.sum_a = np.zeros(self.k)
            self.sum_aa = np.zeros(self.k)
            self.sum_ab = np.zeros(self.k)

    @staticmethod
    def from_draws(a: np.ndarray, b: np.ndarray) -> "RatioMoments":
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        b = np.asarray(b, dtype=float).reshape(-1)
        if a.shape[0] != b.shape[0]:
            raise InvalidParameterError(f"kernel returned {a.shape[0]} numerators for {b.shape[0]} weights")
        return RatioMoments(
            k=a.shape[1],
            count=int(b.shape[0]),
            sum_b=float(np.sum(b)),
            sum_bb=float(np.sum(b * b)),
            sum_a=np.sum(a, axis=0),
            sum_aa=np.sum(a * a, axis=0),
            sum_ab=np.sum(a * b[:, None], axis=0),
        )

    def merge(self, other: "RatioMoments") -> "RatioMoments":
        if other.k != self.k:
            raise InvalidParameterError(f"cannot merge moments with k={self.k} and k={other.k}")
        return RatioMoments(
            k=self.k,
            count=self.count + other.count,
            sum_b=self.sum_b + other.sum_b,
            sum_bb=self.sum_bb + other.sum_bb,
            sum_a=self.sum_a + other.sum_a,
            sum_aa=self.sum_aa + other.sum_aa,
            sum_ab=self.sum_ab + other.sum_ab,
        )

    def mean(self, j: int = 0) -> Tuple[float, float]:
        """E[a_j] の標本平均と標準誤差"""
        n = max(self.count, 1)
        m = self.sum_a[j] / n
        var = max(self.sum_aa[j] / n - m * m, 0.0)
        return float(m), float(np.sqrt(var / n))

    def b_mean(self) -> float:
        return self.sum_b / max(self.count, 1)

    def b_se(self) -> float:
        n = max(self.count, 1)
        m = self.sum_b / n
        return float(np.sqrt(max(self.sum_bb / n - m * m, 0.0) / n))

    def ratio(self, j: int = 0) -> Tuple[float, float]:
        """
        E[a_j] / E[b] とデルタ法の標準誤差 sqrt(Var(a - R b) / n) / E[b]
        """
        n = max(self.count, 1)
        mb = self.sum_b / n
        if mb <= 0:
            return float("nan"), float("nan")
        ma = self.sum_a[j] / n
        r = ma / mb
        # E[(a - r b)^2] - (E[a - r b])^2, ただし E[a - r b] = 0
        resid = self.sum_aa[j] / n - 2 * r * self.sum_ab[j] / n + r * r * self.sum_bb / n
        se = np.sqrt(max(resid, 0.0) / n) / mb
        return float(r), float(se)


def shard_sizes(n_mc: int, shards: int) -> List[int]:
    base, extra = divmod(n_mc, shards)
    return [base + (1 if j < extra else 0) for j in range(shards)]


def run_sharded(kernel: Kernel, n_mc: int, rng: RngStream, shards: int = DEFAULT_SHARDS,
                workers: int = 1, batch_size: int = BATCH_SIZE) -> RatioMoments:
    """
    Monte Carlo カーネルをシャードに分割して実行し、モーメントを集約する。

    シャード j は rng.child(j)、その中のバッチ b は rng.child(j).child(b) を使う。
    結果はシャード数で決まり、ワーカー数には依存しない。

    Args:
        kernel (Kernel): (stream, size) から (a, b) を返す関数
        n_mc (int): 総サンプル数
        rng (RngStream): 親ストリーム
        shards (int): シャード数
        workers (int): スレッド数
        batch_size (int): 1 回のカーネル呼び出しの最大サイズ

    Returns:
        RatioMoments: 全シャードの合計
    """
    if n_mc < 1:
        raise InvalidParameterError(f"n_mc must be positive, got {n_mc}")
    if shards < 1:
        raise InvalidParameterError(f"shards must be positive, got {shards}")

    def _run_shard(job: Tuple[int, int]) -> RatioMoments:
        j, size = job
        stream = rng.child(j)
        moments = None
        for b, start in enumerate(range(0, size, batch_size)):
            a_vals, b_vals = kernel(stream.child(b), min(batch_size, size - start))
            part = RatioMoments.from_draws(a_vals, b_vals)
            moments = part if moments is None else moments.merge(part)
        assert moments is not None
        return moments

    jobs = [(j, size) for j, size in enumerate(shard_sizes(n_mc, shards)) if size > 0]
    parts = parallel_map(_run_shard, jobs, workers)
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total
