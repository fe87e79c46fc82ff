from typing import List, Optional, Tuple
import numpy as np

from errors import DegenerateModelError
from core.norms import norm
from core.rng import RngStream
from models.mma_model import CoeffMode, MMASpec
from analytics.montecarlo import DEFAULT_SHARDS, run_sharded
from analytics.samplers import MMASpectralSampler
from analytics.windows import MCValue, SpectralWindow, ThetaEstimate, ThetaMethod


def mma_spectral_window(spec: MMASpec, s: int, t: int, rng: RngStream) -> List[SpectralWindow]:
    """
    Θ と係数配列を 1 回ずつ引き、重みが正のブランチごとに窓を 1 つ返す。

    Args:
        spec (MMASpec): 移動平均の仕様
        s (int): 窓の開始 (<= 0)
        t (int): 窓の終了 (>= 0)
        rng (RngStream): 乱数ストリーム

    Returns:
        List[SpectralWindow]: 最大 m+1 個の重み付き窓 (全ブランチが 0 なら空)
    """
    batch = MMASpectralSampler(spec).sample(rng.generator(), 1, s, t)
    return [batch.window(0, i) for i in range(spec.m + 1) if batch.weights[0, i] > 0]


def _finite_support(spec: MMASpec) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    if spec.coeff_mode != CoeffMode.DETERMINISTIC or spec.spectral.support is None:
        return None
    assert spec.coefficients is not None
    points, weights = spec.spectral.support
    # images[k, i] = ||C_i θ_k||^alpha
    images = np.einsum("idq,kq->kid", spec.coefficients, points)
    powered = np.power(np.asarray(norm(images, spec.norm_spec)).reshape(len(points), spec.m + 1), spec.alpha)
    return powered, weights


def mma_tail_constant(spec: MMASpec, n_mc: int, rng: RngStream,
                      shards: int = DEFAULT_SHARDS, workers: int = 1) -> MCValue:
    """
    裾同値の定数 c = sum_i E||C_i(0)Θ||^alpha。決定的係数かつ有限台の spectral measure なら厳密値。
    """
    exact = _finite_support(spec)
    if exact is not None:
        powered, weights = exact
        return MCValue(float(np.sum(weights * np.sum(powered, axis=1))), 0.0, 0)

    sampler = MMASpectralSampler(spec)

    def _kernel(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = sampler.sample(stream.generator(), size, 0, 0)
        return np.sum(batch.weights, axis=1)[:, None], np.ones(size)

    value, se = run_sharded(_kernel, n_mc, rng, shards=shards, workers=workers).mean(0)
    return MCValue(value, se, n_mc)


def mma_theta(spec: MMASpec, n_mc: int, rng: RngStream,
              shards: int = DEFAULT_SHARDS, workers: int = 1) -> ThetaEstimate:
    """
    移動平均の候補極値指数 (畳み込んだ形)

        θ = E[max_{i=0..m} ||C_i(i)Θ||^alpha] / sum_i E||C_i(0)Θ||^alpha

    分子の C_i(i) は係数過程の対角 (時点 = ブランチ番号) から引く。決定的係数かつ有限台なら
    std_error = 0 の厳密値を返す。

    Args:
        spec (MMASpec): 移動平均の仕様
        n_mc (int): 抽選回数 (厳密値の場合は使わない)
        rng (RngStream): 乱数ストリーム (child(0): Θ, child(1): 係数)

    Returns:
        ThetaEstimate: closed-form または mc-mma

    Raises:
        DegenerateModelError: 分母が 0 以下 ((M3) が成り立たない)
    """
    m = spec.m
    exact = _finite_support(spec)
    if exact is not None:
        powered, weights = exact
        denominator = float(np.sum(weights * np.sum(powered, axis=1)))
        if not denominator > 0:
            raise DegenerateModelError(f"sum_i E||C_i(0) Theta||^alpha = 0 for {spec.describe()} (M3 fails)")
        # 決定的係数では C_i(i) = C_i
        numerator = float(np.sum(weights * np.max(powered, axis=1)))
        return ThetaEstimate(value=float(np.clip(numerator / denominator, 0.0, 1.0)), std_error=0.0,
                             method=ThetaMethod.CLOSED_FORM, n_samples=0,
                             details={"truncation": "none", "tail_constant": denominator})

    def _kernel(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        theta = spec.spectral.sample(stream.child(0).generator(), size)
        coeffs = spec.coefficient_paths(stream.child(1).generator(), size, m + 1)
        images = np.einsum("nlkdq,nq->nlkd", coeffs, theta)
        powered = np.power(np.asarray(norm(images, spec.norm_spec)).reshape(size, m + 1, m + 1), spec.alpha)
        diagonal = powered[:, np.arange(m + 1), np.arange(m + 1)]
        return np.max(diagonal, axis=1)[:, None], np.sum(powered[:, 0], axis=1)

    moments = run_sharded(_kernel, n_mc, rng, shards=shards, workers=workers)
    if not moments.b_mean() > 0:
        raise DegenerateModelError(f"estimated sum_i E||C_i(0) Theta||^alpha <= 0 for {spec.describe()} (M3 fails)")
    value, se = moments.ratio(0)
    return ThetaEstimate(value=float(np.clip(value, 0.0, 1.0)), std_error=se, method=ThetaMethod.MC_MMA,
                         n_samples=n_mc, details={"truncation": "none", "tail_constant": moments.b_mean(),
                                                  "form": "telescoped"})


def mma_theta_branch_form(spec: MMASpec, n_mc: int, rng: RngStream,
                          shards: int = DEFAULT_SHARDS, workers: int = 1) -> ThetaEstimate:
    """
    畳み込む前の形
        sum_i E[sup_{t>=0} ||C_{i+t}(t)Θ||^alpha - sup_{t>=1} ||C_{i+t}(t)Θ||^alpha] / c
    を係数配列から直接評価する (正規化した窓を経由しない)。
    """
    m = spec.m

    def _kernel(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        theta = spec.spectral.sample(stream.child(0).generator(), size)
        coeffs = spec.coefficient_paths(stream.child(1).generator(), size, m + 1)
        images = np.einsum("nlkdq,nq->nlkd", coeffs, theta)
        # powered[n, t, k] = ||C_k(t)Θ||^alpha
        powered = np.power(np.asarray(norm(images, spec.norm_spec)).reshape(size, m + 1, m + 1), spec.alpha)
        numerator = np.zeros(size)
        for i in range(m + 1):
            path = np.stack([powered[:, t, i + t] for t in range(m + 1 - i)], axis=1)
            sup0 = np.max(path, axis=1)
            sup1 = np.max(path[:, 1:], axis=1) if path.shape[1] > 1 else np.zeros(size)
            numerator += sup0 - sup1
        return numerator[:, None], np.sum(powered[:, 0], axis=1)

    moments = run_sharded(_kernel, n_mc, rng, shards=shards, workers=workers)
    if not moments.b_mean() > 0:
        raise DegenerateModelError(f"estimated sum_i E||C_i(0) Theta||^alpha <= 0 for {spec.describe()} (M3 fails)")
    value, se = moments.ratio(0)
    return ThetaEstimate(value=float(np.clip(value, 0.0, 1.0)), std_error=se, method=ThetaMethod.MC_MMA,
                         n_samples=n_mc, details={"truncation": "none", "tail_constant": moments.b_mean(),
                                                  "form": "branch"})
