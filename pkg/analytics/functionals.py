from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Sequence
import numpy as np

from errors import InvalidParameterError
from utils import read_from_file


class FunctionalKind(Enum):
    ZERO = "zero"
    INDICATOR = "indicator"
    EXCESS = "excess"
    LOG_EXCESS = "log-excess"
    CAPPED = "capped"

    @staticmethod
    def from_string(kind: str) -> "FunctionalKind":
        try:
            return FunctionalKind(kind.lower())
        except ValueError:
            valid = ", ".join([k.value for k in FunctionalKind])
            raise InvalidParameterError(f"Invalid functional kind: {kind}. Valid kinds are: {valid}")


@dataclass(frozen=True)
class PointFunctional:
    """
    Laplace 汎関数に使う非負の関数 f(x) = g(||x||)。||x|| <= radius で f = 0。

    Args:
        name (str): 名前
        radius (float): f が消える球の半径 (宣言値, 正)
        kind (FunctionalKind): 関数の形
        params (Dict[str, float]): scale (倍率, 既定 1), level (閾値, 既定 radius)
    """
    name: str
    radius: float
    kind: FunctionalKind
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidParameterError(f"functional '{self.name}' needs a positive vanishing radius, got {self.radius}")
        if self.scale < 0:
            raise InvalidParameterError(f"functional '{self.name}' must be nonnegative (scale={self.scale})")
        if self.kind != FunctionalKind.ZERO and self.level < self.radius:
            raise InvalidParameterError(
                f"functional '{self.name}' does not vanish on the declared radius {self.radius} (level={self.level})")

    @property
    def scale(self) -> float:
        return float(self.params.get("scale", 1.0))

    @property
    def level(self) -> float:
        return float(self.params.get("level", self.radius))

    def __call__(self, norms: np.ndarray) -> np.ndarray:
        r = np.asarray(norms, dtype=float)
        if self.kind == FunctionalKind.ZERO:
            return np.zeros_like(r)
        if self.kind == FunctionalKind.INDICATOR:
            return self.scale * (r > self.level)
        excess = np.maximum(r - self.level, 0.0)
        if self.kind == FunctionalKind.EXCESS:
            return self.scale * excess
        if self.kind == FunctionalKind.CAPPED:
            return self.scale * np.minimum(excess, 1.0)
        return self.scale * np.log(np.maximum(r / self.level, 1.0))

    def total(self, norms: np.ndarray) -> np.ndarray:
        """最後の軸について sum_j f(x_j)"""
        return np.sum(self(norms), axis=-1)


def indicator(scale: float = 1.0, level: float = 1.0, name: str = "indicator") -> PointFunctional:
    """f(x) = scale·1(||x|| > level)"""
    return PointFunctional(name, level, FunctionalKind.INDICATOR, {"scale": scale, "level": level})


def zero_functional() -> PointFunctional:
    return PointFunctional("zero", 1.0, FunctionalKind.ZERO)


def parse_functional_manifest(text: str) -> List[PointFunctional]:
    """
    1 行 1 関数のマニフェストを読む: `name radius kind key=value ...` (# 以降はコメント)

    Args:
        text (str): マニフェストの内容

    Returns:
        List[PointFunctional]: 定義順の関数列
    """
    functionals: List[PointFunctional] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 3:
            raise InvalidParameterError(f"functional manifest line {lineno}: expected 'name radius kind [key=value ...]'")
        name, radius_text, kind_text = tokens[:3]
        params: Dict[str, float] = {}
        for token in tokens[3:]:
            if "=" not in token:
                raise InvalidParameterError(f"functional manifest line {lineno}: bad parameter '{token}'")
            key, value = token.split("=", 1)
            if key not in ("scale", "level"):
                raise InvalidParameterError(f"functional manifest line {lineno}: unknown parameter '{key}'")
            params[key] = float(value)
        try:
            functionals.append(PointFunctional(name, float(radius_text), FunctionalKind.from_string(kind_text), params))
        except ValueError as e:
            raise InvalidParameterError(f"functional manifest line {lineno}: {e}")
    return functionals


def load_functional_manifest(path: Path) -> List[PointFunctional]:
    text = read_from_file(path)
    if text is None:
        raise InvalidParameterError(f"functional manifest not found: {path}")
    return parse_functional_manifest(text)


# (窓 y (..., L, d), ノルム ||y_j|| (..., L), y_0 の位置) -> 値
WindowFunction = Callable[[np.ndarray, np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class WindowFunctional:
    """
    時間変換恒等式の検証に使う窓 (y_s, ..., y_t) 上の有界関数。

    fn の値に min(||y_0||, 1) を掛けるので、y_0 = 0 で必ず 0 になる。窓の長さは
    呼び出しごとに変わってよく、origin が y_0 の位置を示す。
    """
    name: str
    fn: WindowFunction

    def __call__(self, window: np.ndarray, norms: np.ndarray, origin: int) -> np.ndarray:
        return np.minimum(norms[..., origin], 1.0) * self.fn(window, norms, origin)


def _after(norms: np.ndarray, origin: int) -> np.ndarray:
    return np.max(norms[..., origin + 1:], axis=-1, initial=0.0)


def _before(norms: np.ndarray, origin: int) -> np.ndarray:
    return np.max(norms[..., :origin], axis=-1, initial=0.0)


def _others(norms: np.ndarray, origin: int) -> np.ndarray:
    return np.sum(norms, axis=-1) - norms[..., origin]


TIME_CHANGE_BATTERY: Sequence[WindowFunctional] = (
    WindowFunctional("anchor-forward", lambda y, n, o: (_after(n, o) > 0.5).astype(float)),
    WindowFunctional("anchor-backward", lambda y, n, o: (_before(n, o) > 0.5).astype(float)),
    WindowFunctional("anchor-product", lambda y, n, o: np.minimum(_after(n, o), 1.0)),
    WindowFunctional("anchor-decay", lambda y, n, o: np.exp(-_others(n, o))),
    WindowFunctional("anchor-mass", lambda y, n, o: 1.0 - np.exp(-_others(n, o))),
)


def battery_functional(name: str) -> WindowFunctional:
    for functional in TIME_CHANGE_BATTERY:
        if functional.name == name:
            return functional
    valid = ", ".join(f.name for f in TIME_CHANGE_BATTERY)
    raise InvalidParameterError(f"Invalid window functional: {name}. Valid functionals are: {valid}")
