from typing import Optional


class TailprocError(Exception):
    """tailproc の全例外の基底クラス"""


class InvalidParameterError(TailprocError, ValueError):
    """不正なパラメータ (alpha <= 0, 次元の不一致, k >= n など)"""


class DivergenceError(TailprocError, RuntimeError):
    """
    再帰が有限値でなくなった場合のエラー。定常性の条件が満たされていないことを示す。

    Attributes:
        step (int): 発散を検出した時刻 (burn-in を含む通し番号)
    """
    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"Recursion diverged to a non-finite value at time step {step}")


class DegenerateError(TailprocError, ValueError):
    """推定量やモデルが退化している場合の基底クラス"""


class DegenerateModelError(DegenerateError):
    """(M3) が破れている: 全ブランチの重みが 0"""


class DegenerateProjectionError(DegenerateError):
    """線形射影 a'Θ_0 の分母が有意に正でない"""


class DegenerateThresholdError(DegenerateError):
    """閾値を超える点が存在しない"""


class EmptyEstimateError(DegenerateError):
    """推定に使えるアンカーやブロックが 0 個"""


class ConfigError(TailprocError, ValueError):
    """
    設定ファイルのエラー。問題のあるキーを `section.key` の形で保持する。
    """
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class CoherenceError(TailprocError, RuntimeError):
    """同じ量の二つの計算経路が許容誤差内で一致しない"""
