from dataclasses import dataclass
from typing import Any, Dict


@dataclass(frozen=True)
class CheckResult:
    """
    不変条件チェックの 1 行。passed が True なら status は "OK"。

    Attributes:
        name (str): チェック名
        statistic (float): 検定統計量 (差の絶対値、p 値など)
        tolerance (float): 許容値
        passed (bool): 合否
        detail (str): 補足
    """
    name: str
    statistic: float
    tolerance: float
    passed: bool
    detail: str = ""

    @property
    def status(self) -> str:
        return "OK" if self.passed else "FAIL"

    def to_record(self) -> Dict[str, Any]:
        return {"check": self.name, "statistic": self.statistic, "tolerance": self.tolerance,
                "status": self.status, "detail": self.detail}

    def format_row(self) -> str:
        return f"{self.name:<40} {self.statistic:>12.6g} {self.tolerance:>12.6g}  {self.status}"
