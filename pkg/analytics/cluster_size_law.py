from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import numpy as np

from errors import DegenerateError, InvalidParameterError
from core.rng import RngStream
from utils import print_status
from analytics.montecarlo import DEFAULT_SHARDS, run_sharded
from analytics.samplers import WindowSampler, draw_radii, draw_windows, truncation_details
from analytics.theta_forward import COHERENCE_SIGMAS, theta_forward
from analytics.windows import ThetaEstimate, pooled_se


@dataclass(frozen=True, eq=False)
class ClusterSizeLaw:
    """
    ν = #{i >= 1 : ||Y_i|| > 1} と極限クラスターサイズ κ の分布。

    Attributes:
        nu (np.ndarray): Pr(ν = k), k = 0..K (最後の要素は Pr(ν >= K))
        nu_se (np.ndarray): 各確率の標準誤差
        kappa (np.ndarray): Pr(κ = k), k = 1..K (kappa[k-1])
        theta (float): θ = Pr(ν = 0)
        theta_se (float): その標準誤差
        tail_bound (float): κ 分布の打ち切り質量の上界 Pr(ν >= K) / θ
        n_samples (int): 抽選回数
        details (Dict[str, Any]): 打ち切りや θ との照合結果
    """
    nu: np.ndarray
    nu_se: np.ndarray
    kappa: np.ndarray
    theta: float
    theta_se: float
    tail_bound: float
    n_samples: int
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def truncation(self) -> int:
        return len(self.nu) - 1

    @property
    def mean_size(self) -> float:
        """E[κ] (= 1/θ)"""
        return float(np.sum(np.arange(1, len(self.kappa) + 1) * self.kappa))

    @property
    def agrees(self) -> Optional[bool]:
        return self.details.get("agrees")

    def kappa_prob(self, k: int) -> float:
        if k < 1 or k > len(self.kappa):
            return 0.0
        return float(self.kappa[k - 1])

    def laplace_transform(self, s: float) -> float:
        """E e^{-sκ} を κ の分布から直接計算する"""
        ks = np.arange(1, len(self.kappa) + 1)
        return float(np.sum(self.kappa * np.exp(-s * ks)))

    def laplace_from_nu(self, s: float) -> float:
        """E e^{-sκ} = 1 - (1 - e^{-s}) θ^{-1} E e^{-sν}"""
        ks = np.arange(len(self.nu))
        return float(1.0 - (1.0 - np.exp(-s)) * np.sum(self.nu * np.exp(-s * ks)) / self.theta)

    def to_records(self) -> List[Dict[str, Any]]:
        trunc = self.details.get("truncation", "none")
        records: List[Dict[str, Any]] = []
        for k, (p, se) in enumerate(zip(self.nu, self.nu_se)):
            records.append({"method": "nu-law", "k": k, "value": float(p), "std_error": float(se),
                            "n_samples": self.n_samples, "truncation": trunc})
        for k, p in enumerate(self.kappa, start=1):
            records.append({"method": "kappa-law", "k": k, "value": float(p),
                            "std_error": float(np.sqrt(self.nu_se[k - 1] ** 2 + self.nu_se[k] ** 2) / self.theta),
                            "n_samples": self.n_samples, "truncation": trunc})
        records.append({"method": "kappa-mean", "k": None, "value": self.mean_size,
                        "std_error": self.theta_se / self.theta ** 2, "n_samples": self.n_samples,
                        "truncation": trunc, "tail_bound": self.tail_bound})
        return records


def cluster_size_law(sampler: WindowSampler, horizon: int, n_mc: int, rng: RngStream,
                     theta: Optional[ThetaEstimate] = None, shards: int = DEFAULT_SHARDS,
                     workers: int = 1) -> ClusterSizeLaw:
    """
    前向き裾過程 Y_i = Y·Θ_i から ν の分布を推定し、差分公式
    Pr(κ = k) = θ^{-1} {Pr(ν = k-1) - Pr(ν = k)} で κ の分布を作る。

    θ には Pr̂(ν = 0) を使う (分布の和が 1 - tail_bound に一致する)。独立な
    サブストリーム上の theta_forward と 3 SE 以内で一致するかを details に記録する。

    Args:
        sampler (WindowSampler): 前向きスペクトル窓のサンプラー
        horizon (int): ν を数える最大時点 K
        n_mc (int): 抽選回数
        rng (RngStream): 乱数ストリーム (child(0): ν, child(1): 照合用の θ)
        theta (Optional[ThetaEstimate]): 照合に使う θ。省略時は theta_forward で求める

    Returns:
        ClusterSizeLaw: ν と κ の分布

    Raises:
        DegenerateError: θ <= 0 (有限クラスター条件が成り立たない)
    """
    if horizon < 1:
        raise InvalidParameterError(f"horizon must be at least 1, got {horizon}")
    alpha = sampler.alpha

    def _kernel(stream: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
        batch = draw_windows(sampler, stream, size, 0, horizon)
        radius = draw_radii(alpha, stream, size)
        # 同じ Y を全ブランチで共有する。||Y_i|| = 1 は超えないとみなす
        exceed = radius[:, None, None] * batch.norms(sampler.norm_spec)[:, :, 1:] > 1.0
        nu = np.sum(exceed, axis=-1)
        w = batch.weights
        a = np.stack([np.sum(w * (nu == k), axis=1) for k in range(horizon + 1)], axis=1)
        return a, np.sum(w, axis=1)

    moments = run_sharded(_kernel, n_mc, rng.child(0), shards=shards, workers=workers)
    pairs = [moments.ratio(k) for k in range(horizon + 1)]
    nu = np.array([p for p, _ in pairs])
    nu_se = np.array([se for _, se in pairs])

    theta_hat, theta_se = float(nu[0]), float(nu_se[0])
    if not theta_hat > 0:
        raise DegenerateError(f"Pr(nu = 0) = {theta_hat:g} for {sampler.name}; the finite-cluster condition fails")

    kappa = (nu[:-1] - nu[1:]) / theta_hat
    tail_bound = float(nu[-1] / theta_hat)

    reference = theta if theta is not None else theta_forward(
        sampler, horizon, n_mc, rng.child(1), shards=shards, workers=workers, strict=False)
    se = pooled_se(theta_se, reference.std_error)
    agrees = bool(abs(theta_hat - reference.value) <= COHERENCE_SIGMAS * se + 1e-12)
    if not agrees:
        print_status(f"Pr(nu = 0) = {theta_hat:.4f} disagrees with theta = {reference.value:.4f} "
                     f"(pooled SE {se:.4f}) for {sampler.name}", "warning")

    details = truncation_details(sampler, horizon, n_mc)
    details.update({
        "sampler": sampler.name,
        "theta_reference": reference.value,
        "theta_reference_se": reference.std_error,
        "agrees": agrees,
    })
    return ClusterSizeLaw(nu=nu, nu_se=nu_se, kappa=kappa, theta=theta_hat,
                          theta_se=theta_se, tail_bound=tail_bound, n_samples=n_mc, details=details)
