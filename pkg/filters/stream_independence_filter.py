from typing import Callable
import numpy as np

from core.rng import RngStream
from filters.check_result import CheckResult

# index -> サブストリーム
Splitter = Callable[[int], RngStream]


def stream_independence_filter(splitter: Splitter, n_streams: int = 8, n_draws: int = 4096) -> CheckResult:
    """
    分割したサブストリーム同士が独立に見えるかをチェックするフィルター。

    各ストリームから一様乱数を n_draws 個ずつ引き、ストリーム間の相関係数の最大絶対値を
    4/sqrt(n_draws) と比べる。同じストリームを返す分割器は相関 1 で不合格になる。

    Args:
        splitter (Splitter): 番号からサブストリームを作る関数 (通常は RngStream.child)
        n_streams (int): 比べるストリームの数
        n_draws (int): ストリームごとの抽選数

    Returns:
        CheckResult: statistic は相関係数の最大絶対値
    """
    draws = np.stack([splitter(i).generator().random(n_draws) for i in range(n_streams)])
    corr = np.corrcoef(draws)
    off_diagonal = corr[~np.eye(n_streams, dtype=bool)]
    worst = float(np.max(np.abs(off_diagonal)))
    tolerance = 4.0 / np.sqrt(n_draws)
    return CheckResult("stream-independence", worst, float(tolerance), worst <= tolerance,
                       f"streams={n_streams} draws={n_draws}")
