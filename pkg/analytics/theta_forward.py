from typing import Tuple
import numpy as np

from errors import CoherenceError, InvalidParameterError
from core.rng import RngStream
from utils import print_status
from analytics.montecarlo import DEFAULT_SHARDS, run_sharded
from analytics.samplers import WindowSampler, draw_windows, truncation_details
from analytics.windows import ThetaEstimate, ThetaMethod, forward_sups

COHERENCE_SIGMAS = 3.0


def theta_forward(sampler: WindowSampler, horizon: int, n_mc: int, rng: RngStream,
                  shards: int = DEFAULT_SHARDS, workers: int = 1, strict: bool = True) -> ThetaEstimate:
    """
    前向きスペクトル過程から候補極値指数を Monte Carlo で求める。

    E[sup_{i>=0} ||Θ_i||^alpha - sup_{i>=1} ||Θ_i||^alpha] と
    E[max(1 - sup_{1<=i<=T} ||Θ_i||^alpha, 0)] の両方を同じ抽選で計算し、
    一致を確認する (||Θ_0|| = 1 なので各抽選で等しい)。

    Args:
        sampler (WindowSampler): スペクトル窓のサンプラー
        horizon (int): sup を打ち切る時点 T (>= 1)
        n_mc (int): 抽選回数
        rng (RngStream): 乱数ストリーム
        shards (int): シャード数 (結果を決める)
        workers (int): スレッド数 (結果に影響しない)
        strict (bool): 二つの形が 3 SE 以内で一致しなければ CoherenceError

    Returns:
        ThetaEstimate: method = mc-forward
    """
    if horizon < 1:
        raise InvalidParameterError(f"horizon must be at least 1, got {horizon}")
    alpha = sampler.alpha

    def _kernel(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = draw_windows(sampler, stream, size, 0, horizon)
        powered = np.power(batch.norms(sampler.norm_spec), alpha)
        sup0, sup1 = forward_sups(powered, 0)
        w = batch.weights
        a = np.stack([
            np.sum(w * (sup0 - sup1), axis=1),
            np.sum(w * np.maximum(1.0 - sup1, 0.0), axis=1),
        ], axis=1)
        return a, np.sum(w, axis=1)

    moments = run_sharded(_kernel, n_mc, rng, shards=shards, workers=workers)
    diff_value, diff_se = moments.ratio(0)
    pos_value, pos_se = moments.ratio(1)
    if not np.isfinite(pos_value):
        raise InvalidParameterError(f"{sampler.name} produced no positive window weights")

    gap = abs(diff_value - pos_value)
    tolerance = COHERENCE_SIGMAS * max(diff_se, pos_se)
    if gap > tolerance + 1e-12:
        message = (f"forward forms disagree for {sampler.name}: "
                   f"sup-difference {diff_value:.6f} vs positive-part {pos_value:.6f}")
        if strict:
            raise CoherenceError(message)
        print_status(message, "warning")

    details = truncation_details(sampler, horizon, n_mc)
    details.update({
        "form_sup_difference": diff_value,
        "form_positive_part": pos_value,
        "sampler": sampler.name,
        "shards": shards,
    })
    return ThetaEstimate(value=float(np.clip(pos_value, 0.0, 1.0)), std_error=pos_se,
                         method=ThetaMethod.MC_FORWARD, n_samples=n_mc, details=details)
