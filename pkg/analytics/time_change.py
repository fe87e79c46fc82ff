import numbers
from dataclasses import dataclass
from typing import Any, Dict, Tuple
import numpy as np

from errors import InvalidParameterError
from core.rng import RngStream
from analytics.functionals import WindowFunctional
from analytics.montecarlo import DEFAULT_SHARDS, run_sharded
from analytics.samplers import WindowSampler, draw_windows
from analytics.theta_forward import COHERENCE_SIGMAS
from analytics.windows import MCValue, pooled_se


@dataclass(frozen=True)
class IdentityCheck:
    """恒等式の両辺の Monte Carlo 推定と合算標準誤差"""
    name: str
    lhs: MCValue
    rhs: MCValue

    @property
    def std_error(self) -> float:
        return pooled_se(self.lhs.std_error, self.rhs.std_error)

    @property
    def difference(self) -> float:
        return self.lhs.value - self.rhs.value

    @property
    def agrees(self) -> bool:
        return bool(abs(self.difference) <= COHERENCE_SIGMAS * self.std_error + 1e-12)

    def to_record(self) -> Dict[str, Any]:
        return {
            "method": self.name,
            "lhs": self.lhs.value,
            "rhs": self.rhs.value,
            "std_error": self.std_error,
            "n_samples": self.lhs.n_samples,
            "agrees": self.agrees,
        }


def time_change_check(sampler: WindowSampler, i: int, s: int, t: int, f: WindowFunctional, n_mc: int,
                      rng: RngStream, shards: int = DEFAULT_SHARDS, workers: int = 1) -> IdentityCheck:
    """
    時間変換恒等式
        E[f(Θ_{s-i}, ..., Θ_{t-i})] = E[f(Θ_s/||Θ_i||, ..., Θ_t/||Θ_i||) ||Θ_i||^alpha]
    の両辺を独立なサブストリームで推定する。右辺の被積分関数は ||Θ_i|| = 0 で 0。

    f は (t-s+1, d) の窓全体を受け取り、y_0 = 0 で消える有界関数 (WindowFunctional が保証する)。
    i = 0 では両辺は同じ量なので同じ推定値を返し、差は 0 になる。

    Args:
        sampler (WindowSampler): 両側のスペクトル窓を生成できるサンプラー
        i (int): 時間シフト
        s (int): 窓の左端 (s <= 0)
        t (int): 窓の右端 (t >= 0)
        f (WindowFunctional): (y_s, ..., y_t) 上の関数
        n_mc (int): 抽選回数
        rng (RngStream): 乱数ストリーム (child(0): 左辺, child(1): 右辺)

    Returns:
        IdentityCheck: 両辺の推定値

    Raises:
        InvalidParameterError: s <= 0 <= t でない、i が整数でない、または前向きの窓しか生成できない
    """
    if not s <= 0 <= t:
        raise InvalidParameterError(f"time-change window must satisfy s <= 0 <= t, got s={s}, t={t}")
    if isinstance(i, bool) or not isinstance(i, numbers.Integral):
        raise InvalidParameterError(f"time shift must be an integer, got i={i!r}")
    if not sampler.two_sided:
        raise InvalidParameterError(f"time-change check needs two-sided windows; {sampler.name} is forward-only")
    i, alpha, origin = int(i), sampler.alpha, -s
    label = f"time-change[{f.name},i={i},s={s},t={t}]"

    # 左辺は Θ_{s-i..t-i} を含み 0 も含む窓から切り出す
    lo, hi = min(0, s - i), max(0, t - i)

    def _lhs(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = draw_windows(sampler, stream, size, lo, hi)
        first, last = batch.index(s - i), batch.index(t - i) + 1
        norms = batch.norms(sampler.norm_spec)
        value = f(batch.values[..., first:last, :], norms[..., first:last], origin)
        w = batch.weights
        return np.sum(w * value, axis=1)[:, None], np.sum(w, axis=1)

    lhs_moments = run_sharded(_lhs, n_mc, rng.child(0), shards=shards, workers=workers)
    lhs = MCValue(*lhs_moments.ratio(0), n_samples=n_mc)
    if i == 0:
        return IdentityCheck(label, lhs, lhs)

    r_lo, r_hi = min(s, i), max(t, i)

    def _rhs(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = draw_windows(sampler, stream, size, r_lo, r_hi)
        norms = batch.norms(sampler.norm_spec)
        pivot = norms[..., batch.index(i)]
        alive = pivot > 0
        safe = np.where(alive, pivot, 1.0)
        first, last = batch.index(s), batch.index(t) + 1
        window = batch.values[..., first:last, :] / safe[..., None, None]
        value = f(window, norms[..., first:last] / safe[..., None], origin) * np.power(safe, alpha)
        w = batch.weights
        return np.sum(w * np.where(alive, value, 0.0), axis=1)[:, None], np.sum(w, axis=1)

    rhs_moments = run_sharded(_rhs, n_mc, rng.child(1), shards=shards, workers=workers)
    rhs = MCValue(*rhs_moments.ratio(0), n_samples=n_mc)
    return IdentityCheck(label, lhs, rhs)



def lag_reversal_check(sampler: WindowSampler, t: int, n_mc: int, rng: RngStream,
                       shards: int = DEFAULT_SHARDS, workers: int = 1) -> IdentityCheck:
    """
    E||Θ_t||^alpha = Pr(Θ_{-t} != 0) を独立なサブストリームで比較する
    """
    if not sampler.two_sided:
        raise InvalidParameterError(f"lag-reversal check needs two-sided windows; {sampler.name} is forward-only")
    alpha = sampler.alpha
    span = abs(t)

    def _moment(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = draw_windows(sampler, stream, size, -span, span)
        powered = np.power(batch.norms(sampler.norm_spec)[..., batch.index(t)], alpha)
        w = batch.weights
        return np.sum(w * powered, axis=1)[:, None], np.sum(w, axis=1)

    def _nonzero(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = draw_windows(sampler, stream, size, -span, span)
        hit = batch.norms(sampler.norm_spec)[..., batch.index(-t)] > 0
        w = batch.weights
        return np.sum(w * hit, axis=1)[:, None], np.sum(w, axis=1)

    lhs = MCValue(*run_sharded(_moment, n_mc, rng.child(0), shards=shards, workers=workers).ratio(0),
                  n_samples=n_mc)
    rhs = MCValue(*run_sharded(_nonzero, n_mc, rng.child(1), shards=shards, workers=workers).ratio(0),
                  n_samples=n_mc)
    return IdentityCheck(f"lag-reversal[t={t}]", lhs, rhs)
