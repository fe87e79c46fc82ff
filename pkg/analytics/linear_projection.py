from enum import Enum
from typing import Sequence, Tuple
import numpy as np

from errors import DegenerateProjectionError, InvalidParameterError
from core.rng import RngStream
from analytics.montecarlo import DEFAULT_SHARDS, run_sharded
from analytics.samplers import WindowSampler, draw_windows, truncation_details
from analytics.windows import ThetaEstimate, ThetaMethod, forward_sups

SIGNIFICANCE_SIGMAS = 3.0


class Sided(Enum):
    ABS = "abs"
    POSITIVE = "positive"

    @staticmethod
    def from_string(sided: str) -> "Sided":
        try:
            return Sided(sided.lower())
        except ValueError:
            valid = ", ".join([s.value for s in Sided])
            raise InvalidParameterError(f"Invalid projection side: {sided}. Valid sides are: {valid}")


def linear_projection_theta(a: Sequence[float], sampler: WindowSampler, horizon: int, n_mc: int,
                            rng: RngStream, sided: Sided = Sided.ABS, shards: int = DEFAULT_SHARDS,
                            workers: int = 1) -> ThetaEstimate:
    """
    線形結合 a'X_t の候補極値指数。

    abs:      E[sup_{i>=0} |a'Θ_i|^alpha - sup_{i>=1} |a'Θ_i|^alpha] / E|a'Θ_0|^alpha
    positive: 同じ式を (a'Θ_i)_+^alpha で置き換えたもの (片側の最大値)

    Args:
        a (Sequence[float]): 係数ベクトル (長さ d)
        sampler (WindowSampler): 前向きスペクトル窓のサンプラー
        horizon (int): sup を打ち切る時点
        n_mc (int): 抽選回数
        rng (RngStream): 乱数ストリーム
        sided (Sided): abs か positive

    Returns:
        ThetaEstimate: デルタ法の標準誤差つきの比推定

    Raises:
        DegenerateProjectionError: 分母が有意に正でない
    """
    vec = np.asarray(a, dtype=float).reshape(-1)
    if vec.shape[0] != sampler.dim:
        raise InvalidParameterError(f"projection vector has length {vec.shape[0]}, expected d={sampler.dim}")
    if not np.any(vec):
        raise InvalidParameterError("projection vector must be nonzero")
    alpha = sampler.alpha

    def _kernel(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = draw_windows(sampler, stream, size, 0, horizon)
        proj = batch.values @ vec
        base = np.abs(proj) if sided == Sided.ABS else np.maximum(proj, 0.0)
        powered = np.power(base, alpha)
        sup0, sup1 = forward_sups(powered, 0)
        w = batch.weights
        return np.sum(w * (sup0 - sup1), axis=1)[:, None], np.sum(w * powered[..., 0], axis=1)

    moments = run_sharded(_kernel, n_mc, rng, shards=shards, workers=workers)
    denominator, denominator_se = moments.b_mean(), moments.b_se()
    if not denominator > SIGNIFICANCE_SIGMAS * denominator_se or denominator <= 0:
        raise DegenerateProjectionError(
            f"projection denominator {denominator:.3g} (SE {denominator_se:.3g}) is not significantly positive")
    value, se = moments.ratio(0)

    details = truncation_details(sampler, horizon, n_mc)
    details.update({"projection": [float(x) for x in vec], "sided": sided.value, "sampler": sampler.name})
    return ThetaEstimate(value=float(np.clip(value, 0.0, 1.0)), std_error=se,
                         method=ThetaMethod.MC_FORWARD, n_samples=n_mc, details=details)


def univariate_positive_theta(sampler: WindowSampler, horizon: int, n_mc: int, rng: RngStream,
                              shards: int = DEFAULT_SHARDS, workers: int = 1) -> ThetaEstimate:
    """
    1 変量系列の上側の候補極値指数 E[sup_{i>=0}(Θ_i^+)^alpha - sup_{i>=1}(Θ_i^+)^alpha | Θ_0 = 1]
    """
    if sampler.dim != 1:
        raise InvalidParameterError(f"univariate theta needs d = 1, got d={sampler.dim}")
    return linear_projection_theta([1.0], sampler, horizon, n_mc, rng, sided=Sided.POSITIVE,
                                   shards=shards, workers=workers)
