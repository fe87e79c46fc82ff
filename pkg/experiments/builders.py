from dataclasses import dataclass
from typing import Callable, Optional, Union
import numpy as np

from errors import ConfigError, InvalidParameterError
from core.norms import NormSpec
from core.radial import RadialLaw
from core.rng import RngStream
from core.spectral import RVLaw, SpectralMeasure, point_masses, positive_unit, symmetric_unit, uniform_sphere
from models import (
    MMASpec,
    CoeffMode,
    PathMatrix,
    RCARSpec,
    ScaleLaw,
    markov_scale_path,
    simulate_iid,
    simulate_mma,
    simulate_rcar,
)
from analytics import (
    IIDSpectralSampler,
    MMASpectralSampler,
    RCARForwardSampler,
    ThetaEstimate,
    ThetaMethod,
    WindowSampler,
    MCValue,
    mma_tail_constant,
    mma_theta,
    rcar_theta_closed_form,
)
from experiments.config import ExperimentConfig, Family, ModelSection

ModelSpec = Union[RVLaw, MMASpec, RCARSpec]


def build_norm(text: str) -> NormSpec:
    try:
        return NormSpec.from_string(text)
    except InvalidParameterError as e:
        raise ConfigError("model.norm", str(e))


def build_spectral(text: str, dim: int, norm_spec: NormSpec) -> SpectralMeasure:
    """
    spectral measure の記述を解釈する

        positive             1 次元で +1
        symmetric[:p]        1 次元で +1 に p, -1 に 1-p
        uniform              dim 次元のユークリッド単位球面上の一様分布
        points:<pts>[:<w>]   "1 0; 0 1" のような点列と "0.3, 0.7" のような重み
    """
    parts = [p.strip() for p in text.split(":")]
    kind = parts[0].lower()
    try:
        if kind == "positive":
            measure = positive_unit()
        elif kind == "symmetric":
            measure = symmetric_unit(float(parts[1]) if len(parts) > 1 else 0.5)
        elif kind == "uniform":
            measure = uniform_sphere(dim)
        elif kind == "points" and len(parts) >= 2:
            points = parse_matrix(parts[1])
            weights = [float(w) for w in parts[2].split(",")] if len(parts) > 2 else None
            measure = point_masses(points, weights, norm_tag=norm_spec, name=f"points({len(points)})")
        else:
            raise ValueError(f"Invalid spectral measure: {text}. "
                             f"Valid measures are: positive, symmetric[:p], uniform, points:<pts>[:<weights>]")
    except (ValueError, InvalidParameterError) as e:
        raise ConfigError("model.spectral", str(e))
    return measure


def parse_matrix(text: str) -> np.ndarray:
    """ "1 0; 0 1" -> 2×2 行列 (行は ; 区切り、要素は空白区切り)"""
    rows = [[float(v) for v in row.split()] for row in text.split(";") if row.strip()]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError(f"rows of '{text}' must be nonempty and of equal length")
    return np.array(rows)


def parse_coefficients(text: str) -> np.ndarray:
    """
    係数の記述。"1, 1" はスカラー係数 c_0, c_1、"1 0; 0 1 | 0.5 0; 0 0.5" は行列 C_0, C_1。
    """
    try:
        if "|" in text or ";" in text:
            mats = [parse_matrix(block) for block in text.split("|")]
            if any(m.shape != mats[0].shape for m in mats):
                raise ValueError("all coefficient matrices must have the same shape")
            return np.stack(mats)
        return np.array([float(v) for v in text.split(",") if v.strip()])[:, None, None]
    except ValueError as e:
        raise ConfigError("model.coefficients", str(e))


def _scale_law(key: str, text: str) -> ScaleLaw:
    try:
        return ScaleLaw.from_string(text)
    except InvalidParameterError as e:
        raise ConfigError(key, str(e))


def coefficient_law(text: str, base: np.ndarray) -> Callable[[np.random.Generator, int], np.ndarray]:
    """
    ランダム係数 C_i(t) = c_i · U_{t,i}。U は "uniform:lo:hi" か "bernoulli:p" (iid)。
    """
    law = _scale_law("model.coeff_law", text)
    lags = base.shape[0]

    def _draw(gen: np.random.Generator, n: int) -> np.ndarray:
        return law.sample(gen, n * lags).reshape(n, lags, 1, 1) * base[None]

    return _draw


def stationary_coefficient_law(text: str, base: np.ndarray) -> Callable[[np.random.Generator, int], np.ndarray]:
    """
    定常な係数過程 C_i(t) = c_i · U_{t,i}。U_{·,i} は "markov:<stay>:<lo>:<hi>" の
    互いに独立な 2 状態 Markov 連鎖 (ラグごとに 1 本)。
    """
    parts = [p.strip() for p in text.split(":")]
    if parts[0].lower() != "markov" or len(parts) != 4:
        raise ConfigError("model.coeff_law", f"Invalid stationary coefficient law: {text}. "
                                             f"Valid laws are: markov:<stay>:<lo>:<hi>")
    try:
        chain = markov_scale_path(float(parts[1]), float(parts[2]), float(parts[3]))
    except (ValueError, InvalidParameterError) as e:
        raise ConfigError("model.coeff_law", str(e))
    lags = base.shape[0]

    def _draw(gen: np.random.Generator, n: int) -> np.ndarray:
        paths = np.stack([chain(gen, n) for _ in range(lags)], axis=1)
        return paths[:, :, None, None] * base[None]

    return _draw



@dataclass(frozen=True, eq=False)
class ModelHandle:
    """
    設定から組み立てたモデル。シミュレーション、スペクトル窓のサンプラー、解析的な θ への入口。
    """
    family: Family
    spec: ModelSpec
    sampler: WindowSampler
    model_id: str

    @property
    def alpha(self) -> float:
        return self.sampler.alpha

    def simulate(self, n: int, rng: RngStream) -> PathMatrix:
        if isinstance(self.spec, MMASpec):
            return simulate_mma(self.spec, n, rng)
        if isinstance(self.spec, RCARSpec):
            return simulate_rcar(self.spec, n, rng)
        return simulate_iid(self.spec, n, rng)

    def innovations(self, n: int, rng: RngStream) -> Optional[np.ndarray]:
        """simulate と同じストリームから引き直したイノベーション (RCAR は burn-in を挟むので None)"""
        if isinstance(self.spec, MMASpec):
            return self.spec.innovation.sample(rng.child(0), n + self.spec.m)[self.spec.m:]
        if isinstance(self.spec, RVLaw):
            return self.spec.sample(rng, n)
        return None

    def analytic_theta(self, n_mc: int, rng: RngStream, shards: int, workers: int) -> Optional[ThetaEstimate]:
        """モデル固有の θ (iid は 1, MMA は畳み込んだ形, RCAR は決定的スカラー係数のとき閉じた形)"""
        if isinstance(self.spec, MMASpec):
            return mma_theta(self.spec, n_mc, rng, shards=shards, workers=workers)
        if isinstance(self.spec, RCARSpec):
            if self.spec.d == 1 and self.spec.a_deterministic is not None:
                return rcar_theta_closed_form(self.spec)
            return None
        return ThetaEstimate(1.0, 0.0, ThetaMethod.CLOSED_FORM, 0, {"truncation": "none"})

    def tail_constant(self, n_mc: int, rng: RngStream, shards: int, workers: int) -> Optional[MCValue]:
        if isinstance(self.spec, MMASpec):
            return mma_tail_constant(self.spec, n_mc, rng, shards=shards, workers=workers)
        if isinstance(self.spec, RVLaw):
            return MCValue(1.0, 0.0, 0)
        return None


def build_model(config: ExperimentConfig, eps: Optional[float] = None) -> ModelHandle:
    """
    model 節からモデルを組み立てる。下位の検証エラーは問題のキーを名指しした ConfigError にする。
    """
    section = config.model
    norm_spec = build_norm(section.norm)
    try:
        if section.family == Family.IID:
            law = RVLaw(RadialLaw(section.alpha), build_spectral(section.spectral, section.dim, norm_spec))
            return ModelHandle(Family.IID, law, IIDSpectralSampler(law), f"iid(alpha={section.alpha:g},"
                               f"spectral={law.spectral.name},d={law.dim})")
        if section.family == Family.MMA:
            spec = _build_mma(section, norm_spec)
            return ModelHandle(Family.MMA, spec, MMASpectralSampler(spec), spec.describe())
        spec = _build_rcar(section, norm_spec)
        sampler = RCARForwardSampler(spec, eps=eps if eps is not None else config.analysis.eps)
        return ModelHandle(Family.RCAR, spec, sampler, spec.name)
    except ConfigError:
        raise
    except InvalidParameterError as e:
        raise ConfigError(f"model.{_guess_key(str(e))}", str(e))


def _build_mma(section: ModelSection, norm_spec: NormSpec) -> MMASpec:
    coeffs = parse_coefficients(section.coefficients)
    q = coeffs.shape[2]
    innovation = RVLaw(RadialLaw(section.alpha), build_spectral(section.spectral, q, NormSpec.euclidean()
                                                                if q == 1 else norm_spec))
    try:
        mode = CoeffMode.from_string(section.coeff_mode)
    except InvalidParameterError as e:
        raise ConfigError("model.coeff_mode", str(e))
    if mode == CoeffMode.DETERMINISTIC:
        if section.coeff_law:
            raise ConfigError("model.coeff_law", "only used with coeff_mode = iid or stationary")
        return MMASpec.deterministic(coeffs, innovation, norm_spec=norm_spec)
    if not section.coeff_law:
        raise ConfigError("model.coeff_law", f"required with coeff_mode = {mode.value}")
    if mode == CoeffMode.IID:
        sampler = coefficient_law(section.coeff_law, coeffs)
    else:
        sampler = stationary_coefficient_law(section.coeff_law, coeffs)
    # 有界な係数なら (M2) は任意の beta で成り立つ
    beta = section.beta if section.beta is not None else section.alpha + 1.0
    return MMASpec.random(sampler, m=coeffs.shape[0] - 1, d=coeffs.shape[1], q=q, innovation=innovation,
                          mode=mode, beta=beta, norm_spec=norm_spec)


def parse_rcar_coefficient(text: str) -> np.ndarray:
    """ "0.5" は 1 変量、"0.5 0.1; 0 0.3" は d×d 行列"""
    try:
        a = parse_matrix(text)
    except ValueError as e:
        raise ConfigError("model.a", str(e))
    if a.shape[0] != a.shape[1]:
        raise ConfigError("model.a", f"coefficient matrix must be square, got {a.shape}")
    return a


def _build_rcar(section: ModelSection, norm_spec: NormSpec) -> RCARSpec:
    a = parse_rcar_coefficient(section.a)
    d = a.shape[0]
    tag = NormSpec.euclidean() if d == 1 else norm_spec
    innovation = RVLaw(RadialLaw(section.alpha), build_spectral(section.spectral, d, tag))
    scale = _scale_law("model.a_law", section.a_law) if section.a_law else None
    if d == 1 and scale is None:
        spec = RCARSpec.scalar(float(a[0, 0]), innovation, burn_in=section.burn_in)
        if spec.stationary_spectral is not None:
            return spec
    try:
        return RCARSpec.matrix(a, innovation, scale, burn_in=section.burn_in, norm_spec=tag)
    except InvalidParameterError as e:
        raise ConfigError("model.a_law" if scale is not None and "E|U|" in str(e) else "model.a", str(e))


def _guess_key(message: str) -> str:
    lowered = message.lower()
    for key in ("coefficients", "alpha", "spectral", "burn_in", "beta"):
        if key in lowered:
            return key
    if "|a|" in lowered or "a=" in lowered:
        return "a"
    return "family"


def default_threshold_k(n: int) -> int:
    """k の既定値: n/1000 (少なくとも 10)"""
    return max(10, n // 1000)
