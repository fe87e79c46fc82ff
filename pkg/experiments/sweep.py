import csv
import io
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Tuple

from experiments.config import ExperimentConfig
from experiments.report import RESULT_COLUMNS, RunReport
from experiments.runner import ExperimentRunner
from filters.check_result import CheckResult
from utils import print_status, save_to_file

SweepPoint = Tuple[Tuple[str, str], ...]


@dataclass
class SweepResult:
    """ラダーの各点の実行結果"""
    keys: List[str]
    points: List[SweepPoint] = field(default_factory=list)
    reports: List[RunReport] = field(default_factory=list)

    @property
    def checks(self) -> List[CheckResult]:
        return [c for report in self.reports for c in report.checks]

    @property
    def passed(self) -> bool:
        return all(report.passed for report in self.reports)

    def sweep_csv(self) -> str:
        """ラダーの列を先頭に付けた縦持ちの結果表"""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(self.keys) + list(RESULT_COLUMNS))
        for point, report in zip(self.points, self.reports):
            prefix = [value for _, value in point]
            body = report.results_csv().splitlines()[1:]
            for row in csv.reader(body):
                writer.writerow(prefix + row)
        return buf.getvalue()


def ladder_points(ladder: Dict[str, List[str]]) -> List[SweepPoint]:
    """ラダーの直積。空のラダーは 1 点 (上書きなし)"""
    keys = list(ladder)
    return [tuple(zip(keys, values)) for values in itertools.product(*(ladder[k] for k in keys))]


def point_directory(base: Path, point: SweepPoint) -> Path:
    if not point:
        return base
    label = "_".join(f"{key.split('.')[-1]}={value}" for key, value in point)
    return base / label.replace("/", "-").replace(":", "-")


def run_sweep(config: ExperimentConfig, ladder: Dict[str, List[str]], verify: bool = True,
              write: bool = True) -> SweepResult:
    """
    ラダーの各点で run (と verify) を実行し、sweep.csv にまとめる

    Args:
        config (ExperimentConfig): 基になる設定
        ladder (Dict[str, List[str]]): {section.key: [値]}
        verify (bool): 各点で検証も行うか
        write (bool): 点ごとの出力と sweep.csv を書くか

    Returns:
        SweepResult: 各点のレポート
    """
    points = ladder_points(ladder)
    result = SweepResult(keys=list(ladder))
    base_dir = Path(config.output.directory)
    for i, point in enumerate(points):
        label = ", ".join(f"{k}={v}" for k, v in point) or "base config"
        print_status(f"=== SWEEP POINT {i + 1}/{len(points)}: {label} ===", "header")
        point_config = config
        for key, value in point:
            point_config = point_config.with_value(key, value)
        if point:
            point_config = replace(point_config, output=replace(point_config.output, save_paths=False,
                                                                directory=point_directory(base_dir, point)))
        runner = ExperimentRunner(point_config)
        runner.run()
        if verify:
            runner.verify()
        if write:
            runner.write()
        result.points.append(point)
        result.reports.append(runner.report)
    if write:
        save_to_file(result.sweep_csv(), base_dir / "sweep.csv")
        print_status(f"Sweep results written to {base_dir / 'sweep.csv'}", "success")
    return result

