import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple
import numpy as np

from errors import InvalidParameterError

DEFAULT_GAMMA = 0.6


class BlockRule(Enum):
    EXPLICIT = "explicit"
    POWER = "power"


@dataclass(frozen=True)
class BlockSpec:
    """
    ブロック長 r の決め方。explicit は固定値、power は r_n = ceil(n^gamma) (0 < gamma < 1)。
    """
    rule: BlockRule
    r: Optional[int] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.rule == BlockRule.EXPLICIT and (self.r is None or self.r < 1):
            raise InvalidParameterError(f"explicit block length must be >= 1, got r={self.r}")
        if self.rule == BlockRule.POWER and (self.gamma is None or not 0.0 < self.gamma < 1.0):
            raise InvalidParameterError(f"power rule needs 0 < gamma < 1, got gamma={self.gamma}")

    @staticmethod
    def explicit(r: int) -> "BlockSpec":
        return BlockSpec(BlockRule.EXPLICIT, r=r)

    @staticmethod
    def power(gamma: float = DEFAULT_GAMMA) -> "BlockSpec":
        return BlockSpec(BlockRule.POWER, gamma=gamma)

    @staticmethod
    def from_string(text: str) -> "BlockSpec":
        """
        "power:0.6", "explicit:50", または整数 "50" を解釈する
        """
        parts = [p.strip() for p in text.strip().lower().split(":")]
        try:
            if parts[0] == "power":
                return BlockSpec.power(float(parts[1]) if len(parts) > 1 else DEFAULT_GAMMA)
            if parts[0] == "explicit" and len(parts) == 2:
                return BlockSpec.explicit(int(parts[1]))
            if len(parts) == 1:
                return BlockSpec.explicit(int(parts[0]))
        except ValueError as e:
            raise InvalidParameterError(f"Invalid block rule: {text} ({e})")
        raise InvalidParameterError(f"Invalid block rule: {text}. Valid rules are: power:<gamma>, explicit:<r>, <r>")

    def resolve(self, n: int) -> int:
        if n < 1:
            raise InvalidParameterError(f"path length must be positive, got n={n}")
        if self.rule == BlockRule.EXPLICIT:
            assert self.r is not None
            r = self.r
        else:
            assert self.gamma is not None
            r = int(math.ceil(n ** self.gamma))
        if r > n:
            raise InvalidParameterError(f"block length r={r} exceeds path length n={n}")
        return r

    def describe(self) -> str:
        return f"power:{self.gamma:g}" if self.rule == BlockRule.POWER else f"explicit:{self.r}"


def block_counts(mask: np.ndarray, r: int) -> np.ndarray:
    """
    長さ r の連続するブロックごとの超過数。末尾の不完全なブロックは捨てる。
    """
    if r < 1:
        raise InvalidParameterError(f"block length must be >= 1, got r={r}")
    k_n = len(mask) // r
    return np.asarray(mask[:k_n * r], dtype=np.int64).reshape(k_n, r).sum(axis=1)


def window_counts(mask: np.ndarray, starts: np.ndarray, stops: np.ndarray) -> np.ndarray:
    """
    累積和で区間 [start, stop) ごとの超過数を数える
    """
    cs = np.concatenate([[0], np.cumsum(mask, dtype=np.int64)])
    return cs[stops] - cs[starts]


def block_hit_frequency(mask: np.ndarray, r: int) -> Tuple[float, int]:
    """
    超過を 1 つ以上含むブロックの割合と、使ったブロック数 k_n = floor(n/r)
    """
    counts = block_counts(mask, r)
    if len(counts) == 0:
        raise InvalidParameterError(f"block length r={r} leaves no complete block (n={len(mask)})")
    return float(np.mean(counts > 0)), int(len(counts))
