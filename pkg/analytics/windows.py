from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple
import numpy as np

from errors import InvalidParameterError
from core.norms import NormSpec, norm

ANCHOR_TOLERANCE = 1e-12


class ThetaMethod(Enum):
    CLOSED_FORM = "closed-form"
    MC_FORWARD = "mc-forward"
    MC_MMA = "mc-mma"
    RUNS = "runs"
    BLOCKS = "blocks"


@dataclass(frozen=True, eq=False)
class SpectralWindow:
    """
    スペクトル過程の有限窓 (Θ_s, ..., Θ_t) と重要度重み。||Θ_0|| = 1。
    """
    s: int
    t: int
    values: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        if not self.s <= 0 <= self.t:
            raise InvalidParameterError(f"window must satisfy s <= 0 <= t, got s={self.s}, t={self.t}")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != self.t - self.s + 1:
            raise InvalidParameterError(f"window needs {self.t - self.s + 1} vectors, got {vals.shape[0]}")
        if self.weight < 0:
            raise InvalidParameterError(f"window weight must be nonnegative, got {self.weight}")
        object.__setattr__(self, "values", vals)

    def at(self, j: int) -> np.ndarray:
        """Θ_j (窓の外は 0 ベクトル)"""
        if j < self.s or j > self.t:
            return np.zeros(self.values.shape[1])
        return self.values[j - self.s]

    def check_anchor(self, norm_spec: NormSpec) -> bool:
        return abs(float(norm(self.at(0), norm_spec)) - 1.0) <= ANCHOR_TOLERANCE


@dataclass(frozen=True, eq=False)
class TailWindow:
    """
    裾過程の窓 Y_j = Y·Θ_j (Y >= 1 は角度部分と独立)
    """
    spectral: SpectralWindow
    radius: float
    truncation: str = "none"

    def __post_init__(self):
        if self.radius < 1.0:
            raise InvalidParameterError(f"tail radius must be >= 1, got {self.radius}")

    @property
    def s(self) -> int:
        return self.spectral.s

    @property
    def t(self) -> int:
        return self.spectral.t

    @property
    def values(self) -> np.ndarray:
        return self.radius * self.spectral.values


@dataclass(frozen=True)
class ThetaEstimate:
    """
    極値指数の推定値。closed-form は std_error = 0。
    """
    value: float
    std_error: float
    method: ThetaMethod
    n_samples: int
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise InvalidParameterError(f"extremal index must lie in [0, 1], got {self.value}")
        if self.std_error < 0:
            raise InvalidParameterError(f"standard error must be nonnegative, got {self.std_error}")
        if self.method == ThetaMethod.CLOSED_FORM and self.std_error != 0.0:
            raise InvalidParameterError("closed-form estimates carry std_error = 0")

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "method": self.method.value,
            "value": self.value,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "truncation": self.details.get("truncation", "none"),
        }
        for key in sorted(self.details):
            if key != "truncation":
                record[key] = self.details[key]
        return record


@dataclass(frozen=True, eq=False)
class WindowBatch:
    """
    ベクトル化された窓のバッチ。values は (size, branches, L, d)、weights は (size, branches)。
    期待値は重み付き平均 sum w f / sum w で推定する。
    """
    s: int
    t: int
    values: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def index(self, j: int) -> int:
        return j - self.s

    def norms(self, norm_spec: NormSpec) -> np.ndarray:
        """(size, branches, L)"""
        return np.asarray(norm(self.values, norm_spec)).reshape(self.values.shape[:-1])

    def window(self, draw: int, branch: int) -> SpectralWindow:
        return SpectralWindow(self.s, self.t, self.values[draw, branch], float(self.weights[draw, branch]))


def forward_sups(norms_alpha: np.ndarray, s: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    sup_{i>=0} ||Θ_i||^alpha と sup_{i>=1} ||Θ_i||^alpha (窓内の打ち切り)
    """
    zero = -s
    sup0 = np.max(norms_alpha[..., zero:], axis=-1)
    if norms_alpha.shape[-1] > zero + 1:
        sup1 = np.max(norms_alpha[..., zero + 1:], axis=-1)
    else:
        sup1 = np.zeros(norms_alpha.shape[:-1])
    return sup0, sup1


@dataclass(frozen=True)
class MCValue:
    """Monte Carlo の推定値と標準誤差"""
    value: float
    std_error: float
    n_samples: int

    def to_record(self) -> Dict[str, Any]:
        return {"value": self.value, "std_error": self.std_error, "n_samples": self.n_samples}


def pooled_se(*errors: Optional[float]) -> float:
    return float(np.sqrt(sum(e * e for e in errors if e is not None)))
