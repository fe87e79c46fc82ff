from dataclasses import dataclass
from typing import Callable
import numpy as np

from errors import DegenerateError, InvalidParameterError
from core.rng import RngStream
from models.path import PathMatrix
from analytics.windows import ThetaEstimate
from estimators.threshold import ThresholdSpec
from utils import print_status

Estimator = Callable[[PathMatrix, ThresholdSpec, int], ThetaEstimate]


@dataclass(frozen=True)
class BootstrapResult:
    std_error: float
    mean: float
    replicates: int
    failures: int


def block_bootstrap_se(path: PathMatrix, threshold: ThresholdSpec, r: int, estimator: Estimator,
                       n_boot: int, rng: RngStream) -> BootstrapResult:
    """
    長さ r のブロックを復元抽出してパスを組み直し、推定量の標準誤差を求める。
    閾値 x は元のパスで決めたものを固定して使う。

    Args:
        path (PathMatrix): 対象のパス
        threshold (ThresholdSpec): select_threshold 済みの閾値
        r (int): ブロック長
        estimator (Estimator): runs_estimator や blocks_estimator
        n_boot (int): 反復回数 (>= 2)
        rng (RngStream): 乱数ストリーム

    Returns:
        BootstrapResult: 標本標準偏差と失敗 (推定不能) だった反復の数
    """
    if n_boot < 2:
        raise InvalidParameterError(f"bootstrap needs n_boot >= 2, got {n_boot}")
    k_n = path.n // r
    if k_n < 2:
        raise InvalidParameterError(f"bootstrap needs at least two blocks, got n={path.n}, r={r}")
    blocks = path.data[:k_n * r].reshape(k_n, r, path.d)
    gen = rng.generator()

    values = []
    failures = 0
    for _ in range(n_boot):
        picks = gen.integers(0, k_n, size=k_n)
        resampled = PathMatrix(blocks[picks].reshape(k_n * r, path.d), model_id=path.model_id,
                               metadata=path.metadata)
        try:
            values.append(estimator(resampled, threshold, r).value)
        except DegenerateError:
            failures += 1
    if failures:
        print_status(f"{failures} of {n_boot} bootstrap replicates gave no estimate", "warning")
    if len(values) < 2:
        raise DegenerateError(f"only {len(values)} of {n_boot} bootstrap replicates gave an estimate")
    arr = np.array(values)
    return BootstrapResult(std_error=float(np.std(arr, ddof=1)), mean=float(np.mean(arr)),
                           replicates=len(values), failures=failures)
