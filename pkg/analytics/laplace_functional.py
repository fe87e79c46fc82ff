from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple, Union
import numpy as np

from errors import InvalidParameterError
from core.radial import RadialLaw, sample_pareto
from core.rng import RngStream
from utils import print_status
from analytics.functionals import PointFunctional
from analytics.montecarlo import DEFAULT_SHARDS, run_sharded
from analytics.samplers import WindowSampler, draw_radii, draw_windows, truncation_details
from analytics.theta_forward import COHERENCE_SIGMAS
from analytics.windows import MCValue, forward_sups, pooled_se

# ノルムの配列 -> f の値 (同じ形)
NormFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LaplaceResult:
    """
    クラスター点過程の Laplace 汎関数 E exp(-sum_j f(Z_j))。

    general はスペクトル形式の積分、simplified は f が単位球上で 0 のときだけ
    計算される裾過程形式。
    """
    functional: str
    general: MCValue
    simplified: Optional[MCValue]
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.general.value

    @property
    def agrees(self) -> Optional[bool]:
        if self.simplified is None:
            return None
        se = pooled_se(self.general.std_error, self.simplified.std_error)
        return bool(abs(self.general.value - self.simplified.value) <= COHERENCE_SIGMAS * se + 1e-12)

    def to_records(self) -> list:
        trunc = self.details.get("truncation", "none")
        records = [{"method": "laplace-general", "functional": self.functional, "value": self.general.value,
                    "std_error": self.general.std_error, "n_samples": self.general.n_samples, "truncation": trunc}]
        if self.simplified is not None:
            records.append({"method": "laplace-simplified", "functional": self.functional,
                            "value": self.simplified.value, "std_error": self.simplified.std_error,
                            "n_samples": self.simplified.n_samples, "truncation": trunc,
                            "agrees": self.agrees})
        return records


def laplace_functional(f: Union[PointFunctional, NormFunction], sampler: WindowSampler, horizon: int,
                       n_mc: int, rng: RngStream, radius: Optional[float] = None,
                       shards: int = DEFAULT_SHARDS, workers: int = 1) -> LaplaceResult:
    """
    クラスター点過程 sum_j δ_{Z_j} の Laplace 汎関数を前向きスペクトル過程から計算する。

    一般形 (スペクトル形式):
        θ^{-1} ∫ E[e^{-F_0(y)} 1(y S_0 > 1) - e^{-F_1(y)} 1(y S_1 > 1)] d(-y^{-alpha})
    ここで F_k(y) = sum_{i>=k} f(yΘ_i), S_k = sup_{i>=k} ||Θ_i||。y = Y/S_0 (Y ~ Pareto) と
    置いて重み S_0^alpha の重要度サンプリングで評価する。θ は同じ抽選の
    E[S_0^alpha 1(y S_1 <= 1)] で推定するので、f = 0 なら厳密に 1 になる。

    簡略形 (f が単位球上で 0):
        1 - θ^{-1} E[e^{-F_1(Y)} - e^{-F_0(Y)}]
    こちらは独立なサブストリームで評価し、両者の一致を details に記録する。

    Args:
        f (PointFunctional | Callable): ||x|| の関数としての f
        sampler (WindowSampler): 前向きスペクトル窓のサンプラー
        horizon (int): 和と sup を打ち切る時点
        n_mc (int): 抽選回数
        rng (RngStream): 乱数ストリーム (child(0): 一般形, child(1): 簡略形)
        radius (Optional[float]): f が消える球の半径 (PointFunctional なら不要)

    Returns:
        LaplaceResult: 二つの形の値と標準誤差
    """
    vanishing = f.radius if isinstance(f, PointFunctional) else radius
    if vanishing is None or not vanishing > 0:
        raise InvalidParameterError("laplace_functional needs f to vanish on a declared ball ||x|| <= v with v > 0")
    if horizon < 1:
        raise InvalidParameterError(f"horizon must be at least 1, got {horizon}")
    name = f.name if isinstance(f, PointFunctional) else getattr(f, "__name__", "custom")
    alpha = sampler.alpha

    def _general(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = draw_windows(sampler, stream, size, 0, horizon)
        norms = batch.norms(sampler.norm_spec)
        sup0, sup1 = forward_sups(norms, 0)
        pareto = np.asarray(sample_pareto(RadialLaw(alpha), stream.child(2), size)).reshape(size, 1)
        y = pareto / np.where(sup0 > 0, sup0, 1.0)
        scaled = y[:, :, None] * norms
        f0 = np.sum(f(scaled), axis=-1)
        f1 = np.sum(f(scaled[:, :, 1:]), axis=-1)
        beyond = y * sup1 > 1.0
        iw = batch.weights * np.power(sup0, alpha)
        num = np.sum(iw * (np.exp(-f0) - np.exp(-f1) * beyond), axis=1)
        den = np.sum(iw * ~beyond, axis=1)
        return num[:, None], den

    moments = run_sharded(_general, n_mc, rng.child(0), shards=shards, workers=workers)
    g_value, g_se = moments.ratio(0)
    general = MCValue(g_value, g_se, n_mc)

    simplified = None
    if vanishing >= 1.0:
        def _simplified(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
            batch = draw_windows(sampler, stream, size, 0, horizon)
            radii = draw_radii(alpha, stream, size)
            tail = radii[:, None, None] * batch.norms(sampler.norm_spec)
            f0 = np.sum(f(tail), axis=-1)
            f1 = np.sum(f(tail[:, :, 1:]), axis=-1)
            w = batch.weights
            num = np.sum(w * (np.exp(-f1) - np.exp(-f0)), axis=1)
            # θ = Pr(sup_{i>=1} ||Y_i|| <= 1)
            den = np.sum(w * (np.max(tail[:, :, 1:], axis=-1) <= 1.0), axis=1)
            return num[:, None], den

        s_moments = run_sharded(_simplified, n_mc, rng.child(1), shards=shards, workers=workers)
        ratio, ratio_se = s_moments.ratio(0)
        simplified = MCValue(1.0 - ratio, ratio_se, n_mc)

    details = truncation_details(sampler, horizon, n_mc)
    details.update({"sampler": sampler.name, "radius": vanishing})
    result = LaplaceResult(name, general, simplified, details)
    if result.agrees is False:
        assert simplified is not None
        print_status(f"Laplace forms disagree for {name} on {sampler.name}: "
                     f"general {general.value:.5f} vs simplified {simplified.value:.5f}", "warning")
    return result
