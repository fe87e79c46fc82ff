from .config import (
    Family,
    Operation,
    OutputFormat,
    ExperimentConfig,
    load_config,
    parse_config,
    parse_ladder,
)
from .builders import ModelHandle, build_model
from .report import RunReport, write_report
from .runner import ExperimentRunner
from .sweep import SweepResult, run_sweep

__all__ = [
    'Family',
    'Operation',
    'OutputFormat',
    'ExperimentConfig',
    'load_config',
    'parse_config',
    'parse_ladder',
    'ModelHandle',
    'build_model',
    'RunReport',
    'write_report',
    'ExperimentRunner',
    'SweepResult',
    'run_sweep',
]
