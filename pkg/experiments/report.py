import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

from filters.check_result import CheckResult
from utils import VERSION, save_to_file

SCHEMA_VERSION = 1

# results.csv の列 (schemas/results.v1.csv と同じ順序)
RESULT_COLUMNS = (
    "model_id", "seed", "n", "k", "r", "u", "replicate", "operation", "method",
    "value", "std_error", "n_samples", "truncation", "detail",
)

CHECK_COLUMNS = ("check", "statistic", "tolerance", "status", "detail")


def clean(value: Any) -> Any:
    """numpy のスカラーを Python の値に、NaN/inf を None にする"""
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.ndarray):
        return [clean(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    return value


def format_value(value: Any) -> str:
    value = clean(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunReport:
    """
    1 回の実行の結果。records は results.csv の行、distributions は distributions.jsonl の行。
    wall_clock は timing.txt にだけ書く (結果ファイルをバイト単位で再現可能に保つため)。
    """
    config_hash: str
    model_id: str
    master_seed: int
    overrides: Dict[str, str] = field(default_factory=dict)
    records: List[Dict[str, Any]] = field(default_factory=list)
    distributions: List[Dict[str, Any]] = field(default_factory=list)
    checks: List[CheckResult] = field(default_factory=list)
    attestations: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    version: str = VERSION

    def add(self, operation: str, record: Dict[str, Any], **context: Any) -> None:
        row: Dict[str, Any] = {"model_id": self.model_id, "seed": self.master_seed, "operation": operation}
        row.update(context)
        row.update(record)
        self.records.append(row)

    def add_distribution(self, name: str, values: Sequence[Dict[str, Any]], **context: Any) -> None:
        row: Dict[str, Any] = {"model_id": self.model_id, "seed": self.master_seed, "distribution": name}
        row.update(context)
        row["values"] = list(values)
        self.distributions.append(row)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def find(self, operation: str, **match: Any) -> List[Dict[str, Any]]:
        return [r for r in self.records
                if r.get("operation") == operation and all(r.get(k) == v for k, v in match.items())]

    def results_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for record in self.records:
            extra = {k: v for k, v in record.items() if k not in RESULT_COLUMNS}
            row = [format_value(record.get(col)) for col in RESULT_COLUMNS[:-1]]
            detail = ";".join(f"{k}={format_value(extra[k])}" for k in sorted(extra))
            if record.get("detail"):
                detail = f"{record['detail']};{detail}" if detail else str(record["detail"])
            writer.writerow(row + [detail])
        return buf.getvalue()

    def results_jsonl(self) -> str:
        return "".join(json.dumps(clean(r), sort_keys=True, ensure_ascii=False) + "\n" for r in self.records)

    def distributions_jsonl(self) -> str:
        return "".join(json.dumps(clean(r), sort_keys=True, ensure_ascii=False) + "\n" for r in self.distributions)

    def checks_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CHECK_COLUMNS)
        for check in self.checks:
            record = check.to_record()
            writer.writerow([format_value(record[c]) for c in CHECK_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "version": self.version,
            "schema_version": SCHEMA_VERSION,
            "config_hash": self.config_hash,
            "model_id": self.model_id,
            "master_seed": self.master_seed,
            "overrides": self.overrides,
            "attestations": self.attestations,
            "records": self.records,
            "checks": [c.to_record() for c in self.checks],
            "passed": self.passed if self.checks else None,
        }
        return json.dumps(clean(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def timing_text(self) -> str:
        return "".join(f"{stage}={seconds:.3f}\n" for stage, seconds in self.timings.items())

    def check_table(self) -> str:
        header = f"{'check':<40} {'statistic':>12} {'tolerance':>12}  status"
        return "\n".join([header] + [c.format_row() for c in self.checks])


def write_report(report: RunReport, directory: Path, fmt: str = "csv", results: bool = True) -> List[Path]:
    """
    結果ファイルを一時ファイル + rename で書き出す

    Args:
        report (RunReport): 書き出すレポート
        directory (Path): 出力ディレクトリ
        fmt (str): results の形式 (csv / jsonl)
        results (bool): results と distributions を書くか (verify だけのときは checks のみ)

    Returns:
        List[Path]: 書き出したファイル
    """
    written: List[Path] = []
    if results:
        if fmt == "jsonl":
            target = directory / "results.jsonl"
            save_to_file(report.results_jsonl(), target)
        else:
            target = directory / "results.csv"
            save_to_file(report.results_csv(), target)
        written.append(target)
        save_to_file(report.distributions_jsonl(), directory / "distributions.jsonl")
        written.append(directory / "distributions.jsonl")
    if report.checks:
        save_to_file(report.checks_csv(), directory / "checks.csv")
        written.append(directory / "checks.csv")
    save_to_file(report.to_json(), directory / "report.json")
    written.append(directory / "report.json")
    save_to_file(report.timing_text(), directory / "timing.txt")
    written.append(directory / "timing.txt")
    return written
