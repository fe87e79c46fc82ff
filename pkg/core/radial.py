import math
import numbers
from dataclasses import dataclass
from typing import Optional, Union
import numpy as np

from errors import InvalidParameterError
from core.rng import RngLike, as_generator


@dataclass(frozen=True)
class RadialLaw:
    """
    Pareto 動径分布: Pr(R > y) = y^{-alpha} (y >= 1)

    Args:
        alpha (float): 裾指数 (正の有限値)
    """
    alpha: float

    def __post_init__(self):
        valid = isinstance(self.alpha, numbers.Real) and not isinstance(self.alpha, bool)
        if not (valid and math.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidParameterError(f"alpha must be a positive finite real, got {self.alpha!r}")

    def survival(self, y: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        y = np.asarray(y, dtype=float)
        return np.where(y >= 1.0, np.power(np.maximum(y, 1.0), -self.alpha), 1.0)

    def quantile(self, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return pareto_quantile(self.alpha, u)


def pareto_quantile(alpha: float, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    逆変換 R = u^{-1/alpha}。u は (0, 1] の一様乱数。
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0.0) | (u_arr > 1.0)):
        raise InvalidParameterError("uniform draws must lie in (0, 1]")
    out = np.power(u_arr, -1.0 / alpha)
    return float(out) if out.ndim == 0 else out


def sample_pareto(law: RadialLaw, rng: RngLike, size: Optional[int] = None) -> Union[float, np.ndarray]:
    """
    Pareto(alpha) の動径を逆変換で生成する (棄却なし)。

    Args:
        law (RadialLaw): 動径分布
        rng (RngStream | Generator): 乱数源
        size (Optional[int]): None ならスカラーを返す

    Returns:
        float | np.ndarray: R >= 1 を満たすサンプル
    """
    gen = as_generator(rng)
    # Generator.random は [0, 1) なので 1 - U で (0, 1] にする
    u = 1.0 - gen.random(size)
    return pareto_quantile(law.alpha, u)
