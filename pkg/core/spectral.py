from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple
import numpy as np

from errors import InvalidParameterError
from core.norms import NormSpec, norm
from core.radial import RadialLaw, sample_pareto
from core.rng import RngLike, RngStream, as_generator

UNIT_TOLERANCE = 1e-12

SpectralSampler = Callable[[np.random.Generator, int], np.ndarray]
VectorSampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """
    単位球面上の角度分布 (spectral measure)。

    sampler は (Generator, size) を受け取り (size, dim) の配列を返す。有限台の場合は
    support に (points, weights) を保持し、解析側で厳密な期待値計算に使う。
    """
    dim: int
    sampler: SpectralSampler
    norm_tag: NormSpec = field(default_factory=NormSpec.euclidean)
    support: Optional[Tuple[np.ndarray, np.ndarray]] = None
    name: str = "custom"

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParameterError(f"spectral measure dimension must be positive, got {self.dim}")

    def sample(self, rng: RngLike, size: int) -> np.ndarray:
        gen = as_generator(rng)
        theta = np.asarray(self.sampler(gen, size), dtype=float).reshape(size, self.dim)
        radii = norm(theta, self.norm_tag)
        if size > 0 and np.max(np.abs(np.asarray(radii) - 1.0)) > UNIT_TOLERANCE:
            raise InvalidParameterError(f"spectral sampler '{self.name}' produced vectors off the unit sphere")
        return theta


def point_masses(points: Sequence[Sequence[float]], weights: Optional[Sequence[float]] = None,
                 norm_tag: Optional[NormSpec] = None, name: str = "point-masses") -> SpectralMeasure:
    """
    有限個の点に重みを置いた spectral measure。点は norm_tag で正規化される。

    Args:
        points: (K, d) の点列 (ゼロベクトル不可)
        weights: 非負の重み (省略時は一様)
        norm_tag: 単位球を定めるノルム (省略時は euclidean)
    """
    tag = norm_tag or NormSpec.euclidean()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.asarray(norm(pts, tag)).reshape(-1)
    if np.any(radii <= 0):
        raise InvalidParameterError("spectral point masses must be nonzero vectors")
    pts = pts / radii[:, None]

    if weights is None:
        w = np.full(len(pts), 1.0 / len(pts))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(pts),) or np.any(w < 0) or w.sum() <= 0:
            raise InvalidParameterError("spectral weights must be nonnegative, one per point, not all zero")
        w = w / w.sum()

    def _sample(gen: np.random.Generator, size: int) -> np.ndarray:
        idx = gen.choice(len(pts), size=size, p=w)
        return pts[idx]

    return SpectralMeasure(dim=pts.shape[1], sampler=_sample, norm_tag=tag, support=(pts, w), name=name)


def uniform_sphere(dim: int) -> SpectralMeasure:
    """ユークリッド単位球面上の一様分布 (正規乱数を正規化)"""
    def _sample(gen: np.random.Generator, size: int) -> np.ndarray:
        z = gen.standard_normal((size, dim))
        return z / np.sqrt(np.sum(z * z, axis=1, keepdims=True))

    return SpectralMeasure(dim=dim, sampler=_sample, norm_tag=NormSpec.euclidean(), name=f"uniform-sphere-{dim}")


def pushforward(vector_sampler: VectorSampler, dim: int, norm_tag: Optional[NormSpec] = None,
                name: str = "pushforward") -> SpectralMeasure:
    """
    ユーザーのベクトルサンプラーをノルムで割った像測度。ゼロベクトルは引き直す。
    """
    tag = norm_tag or NormSpec.euclidean()

    def _sample(gen: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty((size, dim))
        filled = 0
        while filled < size:
            v = np.asarray(vector_sampler(gen, size - filled), dtype=float).reshape(-1, dim)
            r = np.asarray(norm(v, tag)).reshape(-1)
            v = v[r > 0] / r[r > 0, None]
            out[filled:filled + len(v)] = v
            filled += len(v)
        return out

    return SpectralMeasure(dim=dim, sampler=_sample, norm_tag=tag, name=name)


def positive_unit() -> SpectralMeasure:
    """1 次元で +1 に全質量 (正の Pareto イノベーション)"""
    return point_masses([[1.0]], name="positive")


def symmetric_unit(p: float = 0.5) -> SpectralMeasure:
    """1 次元で +1 に p, -1 に 1-p"""
    return point_masses([[1.0], [-1.0]], [p, 1.0 - p], name="symmetric")


@dataclass(frozen=True, eq=False)
class RVLaw:
    """
    正則変動ベクトルの法則 V = R·Θ (R ~ Pareto(alpha), Θ ~ spectral, 独立)
    """
    radial: RadialLaw
    spectral: SpectralMeasure

    @property
    def alpha(self) -> float:
        return self.radial.alpha

    @property
    def dim(self) -> int:
        return self.spectral.dim

    def sample(self, rng: RngLike, size: int) -> np.ndarray:
        return sample_rv_vector(self.radial, self.spectral, rng, size)


def sample_rv_vector(radial: RadialLaw, spec: SpectralMeasure, rng: RngLike,
                     size: Optional[int] = None) -> np.ndarray:
    """
    V = R·Θ を生成する。動径と角度は独立なサブストリームから引く。

    Args:
        radial (RadialLaw): 動径分布
        spec (SpectralMeasure): 角度分布
        rng (RngStream | Generator): 乱数源
        size (Optional[int]): None なら d 次元ベクトルを 1 本返す

    Returns:
        np.ndarray: (d,) または (size, d)
    """
    n = 1 if size is None else size
    if isinstance(rng, RngStream):
        r = np.asarray(sample_pareto(radial, rng.child(0), n)).reshape(n)
        theta = spec.sample(rng.child(1), n)
    else:
        r = np.asarray(sample_pareto(radial, rng, n)).reshape(n)
        theta = spec.sample(rng, n)
    v = r[:, None] * theta
    return v[0] if size is None else v

