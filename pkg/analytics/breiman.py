from typing import Callable, Optional, Tuple
import numpy as np

from errors import InvalidParameterError
from core.norms import NormSpec, norm
from core.rng import RngStream
from core.spectral import SpectralMeasure
from analytics.montecarlo import DEFAULT_SHARDS, run_sharded
from analytics.windows import MCValue

# (Generator, size) -> (size, d, k) のランダム行列
MatrixSampler = Callable[[np.random.Generator, int], np.ndarray]


def breiman_constant(a_sampler: MatrixSampler, spectral: SpectralMeasure, alpha: float, n_mc: int,
                     rng: RngStream, out_norm: Optional[NormSpec] = None,
                     shards: int = DEFAULT_SHARDS, workers: int = 1) -> MCValue:
    """
    Breiman 定数 E||AΘ||^alpha。A と Θ は別々のサブストリームから引くので独立。

    Args:
        a_sampler (MatrixSampler): ランダム行列 A (d×k) のサンプラー
        spectral (SpectralMeasure): R^k 上の spectral measure
        alpha (float): 裾指数
        n_mc (int): 抽選回数
        rng (RngStream): 乱数ストリーム (child(0): Θ, child(1): A)
        out_norm (Optional[NormSpec]): R^d 上のノルム (省略時は spectral と同じ)

    Returns:
        MCValue: 標本平均と標準誤差
    """
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    target = out_norm or spectral.norm_tag
    k = spectral.dim

    def _kernel(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        theta = spectral.sample(stream.child(0).generator(), size)
        A = np.asarray(a_sampler(stream.child(1).generator(), size), dtype=float)
        if A.ndim == 1:
            A = A.reshape(size, 1, 1)
        if A.shape[0] != size or A.shape[-1] != k:
            raise InvalidParameterError(f"matrix sampler returned shape {A.shape}, expected ({size}, d, {k})")
        images = np.einsum("ndk,nk->nd", A, theta)
        powered = np.power(np.asarray(norm(images, target)).reshape(size), alpha)
        return powered[:, None], np.ones(size)

    moments = run_sharded(_kernel, n_mc, rng, shards=shards, workers=workers)
    value, se = moments.mean(0)
    return MCValue(value, se, n_mc)


def extremal_index_limit(theta: float, u: float, alpha: float) -> float:
    """
    正規化最大値の極限分布 Pr(M_n <= a_n u) -> exp(-θ u^{-alpha})
    """
    if not 0.0 <= theta <= 1.0:
        raise InvalidParameterError(f"extremal index must lie in [0, 1], got {theta}")
    if not u > 0 or not alpha > 0:
        raise InvalidParameterError(f"need u > 0 and alpha > 0, got u={u}, alpha={alpha}")
    return float(np.exp(-theta * u ** (-alpha)))
