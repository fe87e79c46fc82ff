from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Sequence
import numpy as np

from errors import InvalidParameterError
from core.norms import NormSpec, norm
from core.radial import RadialLaw
from core.rng import RngStream
from core.spectral import RVLaw, SpectralMeasure, positive_unit
from models.path import PathMatrix

# (Generator, 時点数) -> (時点数, m+1, d, q)
CoefficientSampler = Callable[[np.random.Generator, int], np.ndarray]

# 係数を一度に生成する時点数 (メモリを O(chunk·m·d·q) に抑える)
COEFFICIENT_CHUNK = 65536


class CoeffMode(Enum):
    DETERMINISTIC = "deterministic"
    IID = "iid"
    STATIONARY = "stationary"

    @staticmethod
    def from_string(mode: str) -> "CoeffMode":
        try:
            return CoeffMode(mode.lower())
        except ValueError:
            valid = ", ".join([c.value for c in CoeffMode])
            raise InvalidParameterError(f"Invalid coefficient mode: {mode}. Valid modes are: {valid}")


@dataclass(frozen=True, eq=False)
class MMASpec:
    """
    ランダム係数の有限次移動平均 X_t = sum_{i=0}^m C_i(t) xi_{t-i} の仕様。

    係数過程とイノベーションは別々のサブストリームから生成されるので、構成上独立になる。
    (M1)-(M3) の仮定は attestations に記録され、レポートに転記される。
    """
    m: int
    d: int
    q: int
    innovation: RVLaw
    coeff_sampler: CoefficientSampler
    coeff_mode: CoeffMode
    norm_spec: NormSpec = field(default_factory=NormSpec.euclidean)
    coefficients: Optional[np.ndarray] = None
    attestations: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 0 or self.d < 1 or self.q < 1:
            raise InvalidParameterError(f"need m >= 0 and d, q >= 1, got m={self.m}, d={self.d}, q={self.q}")
        if self.innovation.dim != self.q:
            raise InvalidParameterError(
                f"innovation dimension {self.innovation.dim} does not match q={self.q}")
        if self.coeff_mode == CoeffMode.DETERMINISTIC:
            if self.coefficients is None:
                raise InvalidParameterError("deterministic mode needs the coefficient array")
            shape = (self.m + 1, self.d, self.q)
            if self.coefficients.shape != shape:
                raise InvalidParameterError(f"coefficients must have shape {shape}, got {self.coefficients.shape}")
            if not np.all(np.isfinite(self.coefficients)):
                raise InvalidParameterError("deterministic coefficients must be finite")

    @property
    def alpha(self) -> float:
        return self.innovation.alpha

    @property
    def spectral(self) -> SpectralMeasure:
        return self.innovation.spectral

    @staticmethod
    def deterministic(coefficients: Sequence, innovation: RVLaw,
                      norm_spec: Optional[NormSpec] = None) -> "MMASpec":
        """
        決定的な係数 C_0, ..., C_m (各 d×q 行列) から仕様を作る
        """
        coeffs = np.asarray(coefficients, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None, None]
        if coeffs.ndim != 3:
            raise InvalidParameterError("coefficients must be a list of d×q matrices")
        m, d, q = coeffs.shape[0] - 1, coeffs.shape[1], coeffs.shape[2]

        def _sampler(gen: np.random.Generator, n_times: int) -> np.ndarray:
            return np.broadcast_to(coeffs, (n_times,) + coeffs.shape)

        return MMASpec(m=m, d=d, q=q, innovation=innovation, coeff_sampler=_sampler,
                       coeff_mode=CoeffMode.DETERMINISTIC, norm_spec=norm_spec or NormSpec.euclidean(),
                       coefficients=coeffs, attestations={"M2": "deterministic coefficients (finite norms)"})

    @staticmethod
    def univariate(c: Sequence[float], alpha: float, spectral: Optional[SpectralMeasure] = None) -> "MMASpec":
        """1 変量 MA(m): X_t = sum c_i xi_{t-i}, xi は Pareto(alpha) (既定は正)"""
        innovation = RVLaw(RadialLaw(alpha), spectral or positive_unit())
        return MMASpec.deterministic(np.asarray(c, dtype=float), innovation)

    @staticmethod
    def random(sampler: CoefficientSampler, m: int, d: int, q: int, innovation: RVLaw,
               mode: CoeffMode = CoeffMode.IID, beta: Optional[float] = None,
               norm_spec: Optional[NormSpec] = None) -> "MMASpec":
        """
        ランダム係数の仕様。iid モードでは sampler の各時点は独立、stationary モードでは
        sampler は長さ n の定常パスを返すものとして扱う (定常性は検証しない)。

        Args:
            beta (Optional[float]): (M2) の E||C_i(0)||^beta < inf を保証する beta (> alpha)
        """
        if mode == CoeffMode.DETERMINISTIC:
            raise InvalidParameterError("use MMASpec.deterministic for deterministic coefficients")
        attest = {"M2": f"E||C_i(0)||^beta < inf attested with beta={beta:g}" if beta is not None
                  else "not attested"}
        if beta is not None and beta <= innovation.alpha:
            raise InvalidParameterError(f"(M2) needs beta > alpha={innovation.alpha:g}, got beta={beta:g}")
        return MMASpec(m=m, d=d, q=q, innovation=innovation, coeff_sampler=sampler, coeff_mode=mode,
                       norm_spec=norm_spec or NormSpec.euclidean(), attestations=attest)

    def coefficient_path(self, gen: np.random.Generator, length: int) -> np.ndarray:
        """長さ length の係数パス (length, m+1, d, q)"""
        out = np.asarray(self.coeff_sampler(gen, length), dtype=float)
        shape = (length, self.m + 1, self.d, self.q)
        if out.shape != shape:
            raise InvalidParameterError(f"coefficient sampler returned shape {out.shape}, expected {shape}")
        return out

    def coefficient_paths(self, gen: np.random.Generator, size: int, length: int) -> np.ndarray:
        """
        独立な size 本の係数パス (size, length, m+1, d, q)
        """
        if self.coeff_mode == CoeffMode.DETERMINISTIC:
            assert self.coefficients is not None
            return np.broadcast_to(self.coefficients, (size, length) + self.coefficients.shape)
        if self.coeff_mode == CoeffMode.IID:
            flat = self.coefficient_path(gen, size * length)
            return flat.reshape((size, length) + flat.shape[1:])
        return np.stack([self.coefficient_path(gen, length) for _ in range(size)])

    def describe(self) -> str:
        return (f"mma(m={self.m},d={self.d},q={self.q},{self.coeff_mode.value},"
                f"alpha={self.alpha:g},spectral={self.spectral.name})")

    def metadata(self) -> Dict[str, str]:
        meta = {
            "alpha": f"{self.alpha:g}",
            "family": "mma",
            "m": str(self.m),
            "coeff_mode": self.coeff_mode.value,
            "M1": f"innovations Pareto({self.alpha:g}) x {self.spectral.name}",
            "M3": self._m3_status(),
        }
        meta.update(self.attestations)
        return meta

    def _m3_status(self) -> str:
        if self.coeff_mode != CoeffMode.DETERMINISTIC or self.spectral.support is None:
            return "attested"
        assert self.coefficients is not None
        points, _ = self.spectral.support
        images = np.einsum("idq,kq->kid", self.coefficients, points)
        ok = bool(np.any(np.asarray(norm(images, self.norm_spec)) > 0))
        return "holds" if ok else "violated"


def simulate_mma(spec: MMASpec, n: int, rng: RngStream,
                 innovations: Optional[np.ndarray] = None,
                 coefficients: Optional[np.ndarray] = None) -> PathMatrix:
    """
    X_t = sum_{i=0}^m C_i(t) xi_{t-i} を厳密に (打ち切りなしで) シミュレートする。

    イノベーションは長さ n+m のバッファに一度だけ生成し、重なる窓で再利用する。
    係数は時点ごとにチャンク単位でストリーム生成する。

    Args:
        spec (MMASpec): モデル仕様
        n (int): パス長
        rng (RngStream): 乱数ストリーム (child(0) がイノベーション, child(1) が係数)
        innovations (Optional[np.ndarray]): テスト用に注入する (n+m, q) のイノベーション
        coefficients (Optional[np.ndarray]): テスト用に注入する (n, m+1, d, q) の係数

    Returns:
        PathMatrix: n×d のパス
    """
    if n < 1:
        raise InvalidParameterError(f"path length must be positive, got n={n}")
    m, d, q = spec.m, spec.d, spec.q

    if innovations is None:
        xi = spec.innovation.sample(rng.child(0), n + m)
    else:
        xi = np.asarray(innovations, dtype=float).reshape(n + m, -1)
        if xi.shape[1] != q:
            raise InvalidParameterError(f"injected innovations have dimension {xi.shape[1]}, expected q={q}")

    # xi[t + m - i] が xi_{t-i} に対応する
    X = np.zeros((n, d))
    if coefficients is not None:
        C = np.asarray(coefficients, dtype=float)
        if C.shape != (n, m + 1, d, q):
            raise InvalidParameterError(f"injected coefficients must have shape {(n, m + 1, d, q)}, got {C.shape}")
        _accumulate(X, C, xi, 0, n, m)
    elif spec.coeff_mode == CoeffMode.DETERMINISTIC:
        assert spec.coefficients is not None
        for i in range(m + 1):
            X += xi[m - i:m - i + n] @ spec.coefficients[i].T
    elif spec.coeff_mode == CoeffMode.STATIONARY:
        # ユーザー定常過程はチャンク境界で途切れないよう一度に生成する
        C = spec.coefficient_path(rng.child(1).generator(), n)
        _accumulate(X, C, xi, 0, n, m)
    else:
        gen = rng.child(1).generator()
        for t0 in range(0, n, COEFFICIENT_CHUNK):
            t1 = min(n, t0 + COEFFICIENT_CHUNK)
            _accumulate(X, spec.coefficient_path(gen, t1 - t0), xi, t0, t1, m)

    return PathMatrix(X, model_id=spec.describe(), seed=rng, metadata=spec.metadata())


def _accumulate(X: np.ndarray, C: np.ndarray, xi: np.ndarray, t0: int, t1: int, m: int) -> None:
    for i in range(m + 1):
        X[t0:t1] += np.einsum("tdq,tq->td", C[:, i], xi[m - i + t0:m - i + t1])
