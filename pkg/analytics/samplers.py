from abc import ABC, abstractmethod
from typing import Any, Dict, Optional
import numpy as np

from errors import InvalidParameterError
from core.norms import NormSpec, norm
from core.radial import RadialLaw, sample_pareto
from core.rng import RngStream
from core.spectral import RVLaw, SpectralMeasure
from models.mma_model import MMASpec
from models.rcar_model import RCARSpec
from analytics.windows import WindowBatch

DEFAULT_EPS = 1e-6


class WindowSampler(ABC):
    """
    スペクトル過程の窓 (Θ_s, ..., Θ_t) を重み付きでバッチ生成するサンプラーの基底クラス。

    Attributes:
        alpha (float): 裾指数
        dim (int): 状態空間の次元 d
        norm_spec (NormSpec): ||Θ_0|| = 1 を定めるノルム
        two_sided (bool): s < 0 の窓を生成できるか
        support_radius (Optional[int]): |j| > support_radius で Θ_j = 0 が厳密に成り立つなら その値
        name (str): 記述子
    """
    alpha: float
    dim: int
    norm_spec: NormSpec
    two_sided: bool = True
    support_radius: Optional[int] = None
    name: str = "sampler"

    @abstractmethod
    def sample(self, gen: np.random.Generator, size: int, s: int, t: int) -> WindowBatch:
        ...

    def check_window(self, s: int, t: int) -> None:
        if not s <= 0 <= t:
            raise InvalidParameterError(f"window must satisfy s <= 0 <= t, got s={s}, t={t}")
        if s < 0 and not self.two_sided:
            raise InvalidParameterError(f"{self.name} only produces forward windows (s = 0), got s={s}")


class IIDSpectralSampler(WindowSampler):
    """iid 列: Θ_0 ~ spectral measure, Θ_j = 0 (j != 0)"""

    def __init__(self, law: RVLaw):
        self.law = law
        self.alpha = law.alpha
        self.dim = law.dim
        self.norm_spec = law.spectral.norm_tag
        self.two_sided = True
        self.support_radius = 0
        self.name = f"iid({law.spectral.name})"

    def sample(self, gen: np.random.Generator, size: int, s: int, t: int) -> WindowBatch:
        self.check_window(s, t)
        values = np.zeros((size, 1, t - s + 1, self.dim))
        values[:, 0, -s] = self.law.spectral.sample(gen, size)
        return WindowBatch(s, t, values, np.ones((size, 1)))


class MMASpectralSampler(WindowSampler):
    """
    移動平均のスペクトル窓。1 回の抽選で Θ と係数配列を 1 つずつ引き、m+1 個の
    ブランチすべてを評価する。ブランチ i の窓は

        Θ_j = C_{i+j}(j) Θ / ||C_i(0) Θ||,  重み ||C_i(0) Θ||^alpha

    (k が 0..m の外なら C_k = 0)。重みが 0 のブランチは値も 0 になる。
    """

    def __init__(self, spec: MMASpec):
        self.spec = spec
        self.alpha = spec.alpha
        self.dim = spec.d
        self.norm_spec = spec.norm_spec
        self.two_sided = True
        self.support_radius = spec.m
        self.name = spec.describe()

    def sample(self, gen: np.random.Generator, size: int, s: int, t: int) -> WindowBatch:
        self.check_window(s, t)
        spec = self.spec
        m, L = spec.m, t - s + 1
        theta = spec.spectral.sample(gen, size)
        coeffs = spec.coefficient_paths(gen, size, L)
        # images[n, l, k] = C_k(s + l) Θ
        images = np.einsum("nlkdq,nq->nlkd", coeffs, theta)

        anchor = np.asarray(norm(images[:, -s], self.norm_spec)).reshape(size, m + 1)
        positive = anchor > 0
        weights = np.where(positive, np.power(anchor, self.alpha), 0.0)
        scale = np.where(positive, 1.0 / np.where(positive, anchor, 1.0), 0.0)

        values = np.zeros((size, m + 1, L, self.dim))
        for i in range(m + 1):
            for l in range(L):
                k = i + s + l
                if 0 <= k <= m:
                    values[:, i, l] = images[:, l, k] * scale[:, i, None]
        return WindowBatch(s, t, values, weights)


class RCARForwardSampler(WindowSampler):
    """
    ランダム係数自己回帰の前向きスペクトル過程 Θ_j = A_j ··· A_1 Θ_0。

    Θ_0 は定常分布の spectral measure から引く。||Θ_j|| が eps を下回った時点で以降を 0 に
    打ち切る。打ち切りによる sup の誤差は 1 サンプルあたり eps^alpha 以下。
    """

    def __init__(self, spec: RCARSpec, spectral: Optional[SpectralMeasure] = None,
                 eps: float = DEFAULT_EPS):
        if spec.alpha is None:
            raise InvalidParameterError(f"{spec.name} needs an attested tail index alpha")
        measure = spectral or spec.stationary_spectral
        if measure is None:
            raise InvalidParameterError(f"{spec.name} needs the spectral measure of its stationary law")
        if measure.dim != spec.d:
            raise InvalidParameterError(f"spectral dimension {measure.dim} does not match d={spec.d}")
        if measure.norm_tag != spec.norm_spec:
            raise InvalidParameterError(f"spectral measure norm {measure.norm_tag} differs from the model norm {spec.norm_spec}")
        if not eps > 0:
            raise InvalidParameterError(f"eps must be positive, got {eps}")
        self.spec = spec
        self.spectral = measure
        self.eps = eps
        self.alpha = spec.alpha
        self.dim = spec.d
        self.norm_spec = measure.norm_tag
        self.two_sided = False
        self.support_radius = 0 if _is_zero(spec.a_deterministic) else None
        self.name = spec.name

    def sample(self, gen: np.random.Generator, size: int, s: int, t: int) -> WindowBatch:
        self.check_window(s, t)
        d = self.dim
        values = np.zeros((size, 1, t + 1, d))
        x = self.spectral.sample(gen, size)
        values[:, 0, 0] = x
        if t == 0:
            return WindowBatch(s, t, values, np.ones((size, 1)))

        A = self.spec.draw_a(gen, size * t).reshape(size, t, d, d)
        alive = np.ones(size, dtype=bool)
        for j in range(1, t + 1):
            x = np.einsum("nde,ne->nd", A[:, j - 1], x)
            alive &= np.asarray(norm(x, self.norm_spec)).reshape(size) >= self.eps
            x = np.where(alive[:, None], x, 0.0)
            values[:, 0, j] = x
        return WindowBatch(s, t, values, np.ones((size, 1)))

    def bias_bound(self, n_mc: int) -> float:
        return float(self.eps ** self.alpha * n_mc)


def _is_zero(a: Optional[np.ndarray]) -> bool:
    return a is not None and not np.any(a)


def draw_windows(sampler: WindowSampler, stream: RngStream, size: int, s: int, t: int) -> WindowBatch:
    """角度部分は stream.child(0) から引く"""
    return sampler.sample(stream.child(0).generator(), size, s, t)


def draw_radii(alpha: float, stream: RngStream, size: int) -> np.ndarray:
    """動径 Y ~ Pareto(alpha) は stream.child(1) から引く (角度部分と独立)"""
    return np.asarray(sample_pareto(RadialLaw(alpha), stream.child(1), size)).reshape(size)


def truncation_details(sampler: WindowSampler, horizon: int, n_mc: int) -> Dict[str, Any]:
    """
    前向きの sup を horizon で打ち切ったときの記録。台が horizon 以内なら厳密。
    """
    if sampler.support_radius is not None and sampler.support_radius <= horizon:
        return {"truncation": "none", "horizon": horizon}
    details: Dict[str, Any] = {"truncation": f"horizon={horizon}", "horizon": horizon}
    if isinstance(sampler, RCARForwardSampler):
        details["truncation"] = f"horizon={horizon};eps={sampler.eps:g}"
        details["bias_bound"] = sampler.bias_bound(n_mc)
    return details
