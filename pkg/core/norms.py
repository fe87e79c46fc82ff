from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union
import numpy as np
from scipy import optimize
from scipy.stats import qmc

from errors import InvalidParameterError

OPERATOR_NORM_TOLERANCE = 1e-6

# 頂点列挙で厳密に計算できる入力次元の上限
_MAX_VERTEX_DIM = 16


class NormKind(Enum):
    EUCLIDEAN = "euclidean"
    MAX = "max"
    BLOCK_MAX = "block-max"


@dataclass(frozen=True)
class NormSpec:
    """
    ノルムの指定。block-max は連続する blocks 個のブロックに inner ノルムを適用し、その最大をとる。
    """
    kind: NormKind
    inner: Optional["NormSpec"] = None
    blocks: int = 1

    def __post_init__(self):
        if self.kind == NormKind.BLOCK_MAX:
            if self.inner is None:
                raise InvalidParameterError("block-max norm needs an inner norm")
            if self.blocks < 1:
                raise InvalidParameterError(f"block-max norm needs blocks >= 1, got {self.blocks}")

    @staticmethod
    def euclidean() -> "NormSpec":
        return NormSpec(NormKind.EUCLIDEAN)

    @staticmethod
    def maximum() -> "NormSpec":
        return NormSpec(NormKind.MAX)

    @staticmethod
    def block_max(inner: "NormSpec", blocks: int) -> "NormSpec":
        return NormSpec(NormKind.BLOCK_MAX, inner=inner, blocks=blocks)

    @staticmethod
    def from_string(text: str) -> "NormSpec":
        """
        "euclidean" (別名 "l2")、"max" (別名 "sup")、"block-max:<inner>:<blocks>" を解釈する
        """
        parts = [p.strip() for p in text.strip().lower().split(":")]
        if parts[0] in ("euclidean", "l2"):
            return NormSpec.euclidean()
        if parts[0] in ("max", "sup"):
            return NormSpec.maximum()
        if parts[0] == "block-max" and len(parts) == 3 and parts[2].isdigit():
            return NormSpec.block_max(NormSpec.from_string(parts[1]), int(parts[2]))
        raise InvalidParameterError(f"Invalid norm: {text}. "
                                    f"Valid norms are: euclidean (l2), max (sup), block-max:<inner>:<blocks>")

    def describe(self) -> str:
        if self.kind == NormKind.BLOCK_MAX:
            assert self.inner is not None
            return f"block-max:{self.inner.describe()}:{self.blocks}"
        return self.kind.value


def norm(v: np.ndarray, spec: NormSpec) -> Union[float, np.ndarray]:
    """
    最後の軸をベクトルとみなしてノルムを計算する。

    Args:
        v (np.ndarray): (..., d) の配列
        spec (NormSpec): ノルムの指定

    Returns:
        float | np.ndarray: 先頭の軸ごとのノルム
    """
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    out = _norm_last_axis(arr, spec)
    return float(out) if np.ndim(out) == 0 else out


def _norm_last_axis(arr: np.ndarray, spec: NormSpec) -> np.ndarray:
    if spec.kind == NormKind.EUCLIDEAN:
        return np.sqrt(np.sum(arr * arr, axis=-1))
    if spec.kind == NormKind.MAX:
        return np.max(np.abs(arr), axis=-1) if arr.shape[-1] > 0 else np.zeros(arr.shape[:-1])
    assert spec.inner is not None
    d = arr.shape[-1]
    if d % spec.blocks != 0:
        raise InvalidParameterError(f"vector length {d} is not divisible into {spec.blocks} blocks")
    blocked = arr.reshape(arr.shape[:-1] + (spec.blocks, d // spec.blocks))
    return np.max(_norm_last_axis(blocked, spec.inner), axis=-1)


def _is_max_ball(spec: NormSpec) -> bool:
    # max ノルムの block-max も max ノルムと同じ単位球
    if spec.kind == NormKind.MAX:
        return True
    return spec.kind == NormKind.BLOCK_MAX and spec.inner is not None and _is_max_ball(spec.inner)


def _is_plain_euclidean(spec: NormSpec) -> bool:
    return spec.kind == NormKind.EUCLIDEAN


def operator_norm(A: np.ndarray, in_norm: NormSpec, out_norm: NormSpec) -> float:
    """
    作用素ノルム sup_{||x||_in = 1} ||A x||_out。

    euclidean→euclidean は最大特異値、max 球からの写像は頂点列挙、euclidean→max は
    行ノルムの最大で厳密に求める。それ以外は決定的なグリッド探索と局所最適化で、
    相対誤差 OPERATOR_NORM_TOLERANCE 以内。

    Args:
        A (np.ndarray): d×k 行列
        in_norm (NormSpec): R^k 上のノルム
        out_norm (NormSpec): R^d 上のノルム

    Returns:
        float: 作用素ノルム
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d, k = A.shape
    if k == 0 or d == 0 or not np.any(A):
        return 0.0

    if _is_plain_euclidean(in_norm) and _is_plain_euclidean(out_norm):
        return float(np.linalg.norm(A, 2))
    if _is_plain_euclidean(in_norm) and _is_max_ball(out_norm):
        return float(np.max(np.sqrt(np.sum(A * A, axis=1))))
    if _is_max_ball(in_norm) and k <= _MAX_VERTEX_DIM:
        # 凸関数の最大値は単位球の端点 (符号ベクトル) で達成される
        codes = np.arange(2 ** k)[:, None]
        vertices = ((codes >> np.arange(k)) & 1) * 2.0 - 1.0
        return float(np.max(_norm_last_axis(vertices @ A.T, out_norm)))

    return _operator_norm_search(A, in_norm, out_norm)


def _operator_norm_search(A: np.ndarray, in_norm: NormSpec, out_norm: NormSpec) -> float:
    k = A.shape[1]

    def ratio(x: np.ndarray) -> float:
        denom = float(_norm_last_axis(x, in_norm))
        if denom <= 0.0:
            return 0.0
        return float(_norm_last_axis(A @ x, out_norm)) / denom

    sampler = qmc.Sobol(d=k, scramble=True, seed=0)
    grid = sampler.random_base2(m=12) * 2.0 - 1.0
    grid = np.vstack([grid, np.eye(k), -np.eye(k)])
    in_norms = _norm_last_axis(grid, in_norm)
    keep = in_norms > 0
    grid, in_norms = grid[keep], in_norms[keep]
    values = _norm_last_axis(grid @ A.T, out_norm) / in_norms

    best = float(np.max(values))
    for idx in np.argsort(values)[::-1][:8]:
        res = optimize.minimize(lambda x: -ratio(x), grid[idx], method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        best = max(best, -float(res.fun))
    return best
