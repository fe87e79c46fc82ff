import sys
import argparse
import traceback
from enum import Enum
from pathlib import Path
from typing import List, Optional

from errors import (
    CoherenceError,
    ConfigError,
    DegenerateError,
    DivergenceError,
    InvalidParameterError,
)
from experiments import ExperimentRunner, load_config, parse_ladder, run_sweep
from utils import VERSION, print_status, set_quiet

# 終了コード
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_DEGENERATE = 3


# 利用可能なサブコマンドを定義するEnum
class Command(Enum):
    SIMULATE = "simulate"
    ANALYTIC = "analytic"
    ESTIMATE = "estimate"
    RUN = "run"          # simulate + analytic + estimate
    VERIFY = "verify"
    SWEEP = "sweep"

    @staticmethod
    def from_string(command: str) -> "Command":
        try:
            return Command(command.lower())
        except ValueError:
            valid_commands = ", ".join([c.value for c in Command])
            raise ValueError(f"Invalid command: {command}. Valid commands are: {valid_commands}")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    コマンドライン引数をパースする

    Returns:
        argparse.Namespace: パースされた引数
    """
    parser = argparse.ArgumentParser(description='Tail process experiments for regularly varying time series')

    parser.add_argument('command', type=str,
                        help=f'実行するサブコマンド (利用可能なコマンド: {", ".join([c.value for c in Command])})')

    parser.add_argument('--config', type=str, required=True,
                        help='実験設定ファイル (INI) のパス')

    parser.add_argument('--seed', type=int,
                        help='run.master_seed を上書きする')

    parser.add_argument('--workers', type=int,
                        help='ワーカー数 (デフォルト: TAILPROC_WORKERS または 1)')

    parser.add_argument('--out', type=str,
                        help='出力ディレクトリ (デフォルト: TAILPROC_OUTPUT_DIR または ./output)')

    parser.add_argument('--format', type=str, choices=['csv', 'jsonl'],
                        help='results の出力形式')

    parser.add_argument('--resume', action='store_true',
                        help='保存済みのパスから再開する (config hash が一致する場合)')

    parser.add_argument('--ladder', type=str, nargs='*', default=[],
                        help='sweep のラダー (KEY=V1,V2,...)')

    parser.add_argument('--quiet', action='store_true',
                        help='info / success のメッセージを表示しない')

    parser.add_argument('--version', action='version', version=f'%(prog)s {VERSION}')

    return parser.parse_args(argv)


def execute(command: Command, args: argparse.Namespace) -> int:
    config = load_config(Path(args.config)).with_overrides(
        seed=args.seed, workers=args.workers, out=Path(args.out) if args.out else None, fmt=args.format)
    print_status(f"Loaded {args.config} (config hash {config.config_hash[:12]})", "info")

    if command == Command.SWEEP:
        ladder = parse_ladder(args.ladder)
        result = run_sweep(config, ladder)
        for report in result.reports:
            if report.checks:
                print(report.check_table())
        return EXIT_OK if result.passed else EXIT_FAILED

    if args.ladder:
        raise ConfigError("ladder", f"--ladder is only used with the sweep command, not {command.value}")

    runner = ExperimentRunner(config, resume=args.resume)
    if command == Command.SIMULATE:
        runner.simulate()
    elif command == Command.ANALYTIC:
        runner.analytic()
    elif command == Command.ESTIMATE:
        runner.simulate()
        runner.estimate()
    elif command == Command.RUN:
        runner.run()
    elif command == Command.VERIFY:
        runner.verify()
    runner.write(results=command != Command.VERIFY)

    if command == Command.VERIFY:
        print(runner.report.check_table())
        if not runner.report.passed:
            failed = [c.name for c in runner.report.checks if not c.passed]
            print_status(f"{len(failed)} invariant(s) failed: {', '.join(failed)}", "error")
            return EXIT_FAILED
        print_status("All invariants passed", "success")
    print_status(f"{command.value} completed; outputs in {config.output.directory}", "header")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    メイン関数。終了コードを返す

        0  成功
        1  検証の失敗、その他のエラー
        2  設定やパラメータの誤り
        3  退化した推定 (アンカーやブロックが無い) や発散
    """
    args = parse_args(argv)
    set_quiet(args.quiet)

    try:
        command = Command.from_string(args.command)
    except ValueError as e:
        print_status(str(e), "error")
        return EXIT_INVALID

    try:
        return execute(command, args)
    except (ConfigError, InvalidParameterError) as e:
        print_status(f"Invalid configuration: {e}", "error")
        return EXIT_INVALID
    except (DegenerateError, DivergenceError) as e:
        print_status(f"Degenerate estimate: {e}", "error")
        return EXIT_DEGENERATE
    except CoherenceError as e:
        print_status(f"Coherence check failed: {e}", "error")
        return EXIT_FAILED
    except Exception as e:
        print_status(f"Error during {args.command}: {e}", "error")
        traceback.print_exc()
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
