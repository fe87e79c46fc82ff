from dataclasses import dataclass
from typing import Callable
import numpy as np

from errors import InvalidParameterError

# (Generator, n) -> (n,) の iid スカラー
ScaleSampler = Callable[[np.random.Generator, int], np.ndarray]
# (Generator, n) -> 長さ n の定常スカラー列
StationaryScaleSampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True, eq=False)
class ScaleLaw:
    """
    係数にかけるスカラー乗数 U の法則。MMA の C_i(t) = c_i U_{t,i} と RCAR の A_t = U_t A で共有する。

    Attributes:
        name (str): 記述子 ("uniform:0.5:1.5" など)
        sampler (ScaleSampler): iid に n 個引く
        bound (float): sup |U|
        moment (Callable[[float], float]): p -> E|U|^p
        signed_moment (Callable[[float], float]): p -> E[sign(U) |U|^p]
    """
    name: str
    sampler: ScaleSampler
    bound: float
    moment: Callable[[float], float]
    signed_moment: Callable[[float], float]

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return np.asarray(self.sampler(gen, n), dtype=float).reshape(n)

    @staticmethod
    def uniform(lo: float, hi: float) -> "ScaleLaw":
        if not lo < hi:
            raise InvalidParameterError(f"uniform law needs lo < hi, got {lo}, {hi}")

        def _odd(u: float, p: float) -> float:
            # d/du = |u|^p
            return float(np.sign(u) * abs(u) ** (p + 1.0) / (p + 1.0))

        def _even(u: float, p: float) -> float:
            # d/du = sign(u) |u|^p
            return float(abs(u) ** (p + 1.0) / (p + 1.0))

        return ScaleLaw(f"uniform:{lo:g}:{hi:g}", lambda gen, n: gen.uniform(lo, hi, size=n),
                        max(abs(lo), abs(hi)),
                        lambda p: (_odd(hi, p) - _odd(lo, p)) / (hi - lo),
                        lambda p: (_even(hi, p) - _even(lo, p)) / (hi - lo))

    @staticmethod
    def bernoulli(p: float) -> "ScaleLaw":
        if not 0.0 < p <= 1.0:
            raise InvalidParameterError(f"bernoulli law needs 0 < p <= 1, got {p}")
        return ScaleLaw(f"bernoulli:{p:g}", lambda gen, n: (gen.random(size=n) < p).astype(float), 1.0,
                        lambda q: p, lambda q: p)

    @staticmethod
    def from_string(text: str) -> "ScaleLaw":
        """ "uniform:<lo>:<hi>" か "bernoulli:<p>" """
        parts = [p.strip() for p in text.split(":")]
        kind = parts[0].lower()
        try:
            if kind == "uniform" and len(parts) == 3:
                return ScaleLaw.uniform(float(parts[1]), float(parts[2]))
            if kind == "bernoulli" and len(parts) == 2:
                return ScaleLaw.bernoulli(float(parts[1]))
        except ValueError as e:
            raise InvalidParameterError(f"Invalid scale law: {text}. {e}")
        raise InvalidParameterError(f"Invalid scale law: {text}. Valid laws are: uniform:<lo>:<hi>, bernoulli:<p>")


def markov_scale_path(stay: float, lo: float, hi: float) -> StationaryScaleSampler:
    """
    {lo, hi} 上の対称な 2 状態 Markov 連鎖。滞在確率 stay、定常分布 (1/2, 1/2) から開始する。

    Raises:
        InvalidParameterError: stay が [0, 1) の外
    """
    if not 0.0 <= stay < 1.0:
        raise InvalidParameterError(f"markov law needs 0 <= stay < 1, got {stay}")

    def _path(gen: np.random.Generator, n: int) -> np.ndarray:
        start = gen.random() < 0.5
        flips = gen.random(size=n) >= stay
        flips[0] = False
        state = np.logical_xor(start, np.cumsum(flips) % 2 == 1)
        return np.where(state, hi, lo)

    return _path
