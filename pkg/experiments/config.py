import configparser
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from errors import ConfigError, InvalidParameterError
from estimators.blocks import BlockSpec
from utils import config_hash, default_output_dir, default_workers

SECTIONS: Dict[str, Tuple[str, ...]] = {
    "model": ("family", "alpha", "dim", "spectral", "coefficients", "coeff_mode", "coeff_law", "beta",
              "a", "a_law", "burn_in", "norm"),
    "analysis": ("operations", "k", "quantile", "r_rule", "levels", "horizon", "n_mc", "shards", "window",
                 "m_list", "functionals", "projection", "sided", "time_change_lags", "lag", "n_boot",
                 "corrected", "max_cluster_size", "eps", "agreement_tolerance", "tv_tolerance"),
    "run": ("n", "replicates", "master_seed", "workers"),
    "output": ("directory", "format", "save_paths"),
}


# CLI フラグでも上書きできるキー
FLAG_KEYS = ("run.master_seed", "run.workers", "output.directory", "output.format")


class Family(Enum):
    IID = "iid"
    MMA = "mma"
    RCAR = "rcar"

    @staticmethod
    def from_string(name: str) -> "Family":
        try:
            return Family(name.strip().lower())
        except ValueError:
            valid = ", ".join([f.value for f in Family])
            raise ValueError(f"Invalid model family: {name}. Valid families are: {valid}")


class Operation(Enum):
    # tail-analytic
    THETA = "theta"
    THETA_FORWARD = "theta-forward"
    THETA_BRANCH = "theta-branch"
    TAIL_CONSTANT = "tail-constant"
    CLUSTER_LAW = "cluster-law"
    LAPLACE = "laplace"
    TIME_CHANGE = "time-change"
    LAG_REVERSAL = "lag-reversal"
    PROJECTION = "projection"
    # estimators
    TAIL_PROCESS = "tail-process"
    RUNS = "runs"
    BLOCKS = "blocks"
    CLUSTERS = "clusters"
    POINT_PROCESS = "point-process"
    ANTICLUSTER = "anticluster"
    TAIL_EQUIVALENCE = "tail-equivalence"
    MAXIMUM_LAW = "maximum-law"
    BOOTSTRAP = "bootstrap"

    @staticmethod
    def from_string(name: str) -> "Operation":
        try:
            return Operation(name.strip().lower())
        except ValueError:
            valid = ", ".join([o.value for o in Operation])
            raise ValueError(f"Invalid operation: {name}. Valid operations are: {valid}")

    @property
    def analytic(self) -> bool:
        return self in ANALYTIC_OPERATIONS


ANALYTIC_OPERATIONS = (
    Operation.THETA, Operation.THETA_FORWARD, Operation.THETA_BRANCH, Operation.TAIL_CONSTANT,
    Operation.CLUSTER_LAW, Operation.LAPLACE, Operation.TIME_CHANGE, Operation.LAG_REVERSAL,
    Operation.PROJECTION,
)

DEFAULT_OPERATIONS = (
    Operation.THETA, Operation.THETA_FORWARD, Operation.CLUSTER_LAW, Operation.TAIL_PROCESS,
    Operation.RUNS, Operation.BLOCKS, Operation.CLUSTERS, Operation.POINT_PROCESS,
)


class OutputFormat(Enum):
    CSV = "csv"
    JSONL = "jsonl"

    @staticmethod
    def from_string(name: str) -> "OutputFormat":
        try:
            return OutputFormat(name.strip().lower())
        except ValueError:
            valid = ", ".join([f.value for f in OutputFormat])
            raise ValueError(f"Invalid output format: {name}. Valid formats are: {valid}")


@dataclass(frozen=True)
class ModelSection:
    family: Family
    alpha: float
    dim: int = 1
    spectral: str = "positive"
    coefficients: str = ""
    coeff_mode: str = "deterministic"
    coeff_law: str = ""
    beta: Optional[float] = None
    a: str = ""
    a_law: str = ""
    burn_in: int = 1000
    norm: str = "euclidean"


@dataclass(frozen=True)
class AnalysisSection:
    operations: Tuple[Operation, ...] = DEFAULT_OPERATIONS
    k: Optional[int] = None
    quantile: Optional[float] = None
    r_rule: BlockSpec = field(default_factory=BlockSpec.power)
    levels: Tuple[float, ...] = (1.0, 2.0, 4.0)
    horizon: int = 10
    n_mc: int = 100000
    shards: int = 16
    window: Tuple[int, int] = (-2, 2)
    m_list: Tuple[int, ...] = (1, 2, 3, 5, 10)
    functionals: Optional[Path] = None
    projection: Tuple[float, ...] = ()
    sided: str = "abs"
    time_change_lags: Tuple[int, ...] = (-2, -1, 0, 1, 2)
    lag: int = 1
    n_boot: int = 0
    corrected: bool = False
    max_cluster_size: int = 10
    eps: float = 1e-6
    agreement_tolerance: float = 0.05
    tv_tolerance: float = 0.1


@dataclass(frozen=True)
class RunSection:
    n: int
    replicates: int = 1
    master_seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class OutputSection:
    directory: Path
    format: OutputFormat = OutputFormat.CSV
    save_paths: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    """
    実験設定。raw は読み込んだバイト列そのもので、config_hash はその SHA-256。
    CLI からの上書きは overrides に別途記録する。
    """
    model: ModelSection
    analysis: AnalysisSection
    run: RunSection
    output: OutputSection
    raw: bytes = b""
    source: Optional[Path] = None
    overrides: Dict[str, str] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def with_overrides(self, seed: Optional[int] = None, workers: Optional[int] = None,
                       out: Optional[Path] = None, fmt: Optional[str] = None) -> "ExperimentConfig":
        """CLI フラグによる上書き (ハッシュは元のバイト列のまま)"""
        config = self
        overrides = dict(self.overrides)
        if seed is not None:
            config = replace(config, run=replace(config.run, master_seed=_check_seed("run.master_seed", seed)))
            overrides["run.master_seed"] = str(seed)
        if workers is not None:
            if workers < 1:
                raise ConfigError("run.workers", f"must be >= 1, got {workers}")
            config = replace(config, run=replace(config.run, workers=workers))
            overrides["run.workers"] = str(workers)
        if out is not None:
            config = replace(config, output=replace(config.output, directory=Path(out)))
            overrides["output.directory"] = str(out)
        if fmt is not None:
            config = replace(config, output=replace(config.output, format=_parse("output.format", fmt,
                                                                                  OutputFormat.from_string)))
            overrides["output.format"] = fmt
        return replace(config, overrides=overrides)

    def with_value(self, key: str, value: str) -> "ExperimentConfig":
        """
        ラダー用に 1 つのキーを差し替えて検証し直す。key は `section.key` か、一意に決まる `key`。
        """
        section, name = resolve_key(key)
        overrides = dict(self.overrides)
        overrides[f"{section}.{name}"] = value
        parser = _parser_from_bytes(self.raw)
        flags: Dict[str, str] = {}
        for full_key, text in overrides.items():
            if full_key in FLAG_KEYS:
                flags[full_key] = text
                continue
            sec, name = full_key.split(".", 1)
            if not parser.has_section(sec):
                parser.add_section(sec)
            parser.set(sec, name, text)
        updated = from_parser(parser, self.raw, self.source)
        updated = updated.with_overrides(
            seed=_int("run.master_seed", flags["run.master_seed"]) if "run.master_seed" in flags else None,
            workers=_int("run.workers", flags["run.workers"]) if "run.workers" in flags else None,
            out=Path(flags["output.directory"]) if "output.directory" in flags else None,
            fmt=flags.get("output.format"))
        return replace(updated, overrides=overrides)

    def describe(self) -> Dict[str, str]:
        return {
            "family": self.model.family.value,
            "alpha": f"{self.model.alpha:g}",
            "n": str(self.run.n),
            "master_seed": str(self.run.master_seed),
            "config_hash": self.config_hash,
        }


def resolve_key(key: str) -> Tuple[str, str]:
    """`section.key` または節を省いた `key` を (section, key) に解決する"""
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SECTIONS or name not in SECTIONS[section]:
            raise ConfigError(key, "unknown parameter")
        return section, name
    matches = [s for s, keys in SECTIONS.items() if key in keys]
    if len(matches) != 1:
        raise ConfigError(key, "unknown parameter" if not matches else f"ambiguous parameter (sections: {matches})")
    return matches[0], key


def load_config(path: Path) -> ExperimentConfig:
    """
    INI 形式の実験設定を読み込み、検証する

    Args:
        path (Path): 設定ファイル

    Returns:
        ExperimentConfig: 検証済みの設定

    Raises:
        ConfigError: 不明な節やキー、不正な値 (問題のある `section.key` を含む)
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}")
    return parse_config(raw, Path(path))


def parse_config(raw: bytes, source: Optional[Path] = None) -> ExperimentConfig:
    return from_parser(_parser_from_bytes(raw), raw, source)


def _parser_from_bytes(raw: bytes) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(raw.decode("utf-8"))
    except (configparser.Error, UnicodeDecodeError) as e:
        raise ConfigError("config", f"cannot parse: {e}")
    return parser


def from_parser(parser: configparser.ConfigParser, raw: bytes, source: Optional[Path]) -> ExperimentConfig:
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(section, f"unknown section (valid sections: {', '.join(SECTIONS)})")
        for key in parser[section]:
            if key not in SECTIONS[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    for required in ("model", "run"):
        if not parser.has_section(required):
            raise ConfigError(required, "missing section")

    base_dir = source.parent if source is not None else Path(".")
    model = _model_section(parser["model"])
    run = _run_section(parser["run"])
    analysis = _analysis_section(parser["analysis"] if parser.has_section("analysis") else {}, base_dir)
    output = _output_section(parser["output"] if parser.has_section("output") else {})

    if analysis.k is not None and analysis.k >= run.n:
        raise ConfigError("analysis.k", f"must be smaller than run.n={run.n}, got {analysis.k}")
    if analysis.k is not None and analysis.quantile is not None:
        raise ConfigError("analysis.quantile", "give either analysis.k or analysis.quantile, not both")
    try:
        analysis.r_rule.resolve(run.n)
    except InvalidParameterError as e:
        raise ConfigError("analysis.r_rule", str(e))
    return ExperimentConfig(model=model, analysis=analysis, run=run, output=output, raw=raw, source=source)


def _parse(key: str, text: str, fn):
    try:
        return fn(text)
    except (ValueError, TypeError) as e:
        raise ConfigError(key, str(e))


def _int(key: str, text: str, minimum: Optional[int] = None) -> int:
    value = _parse(key, text, lambda s: int(s.strip()))
    if minimum is not None and value < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {value}")
    return value


def _float(key: str, text: str, positive: bool = False) -> float:
    value = _parse(key, text, lambda s: float(s.strip()))
    if positive and not value > 0:
        raise ConfigError(key, f"must be positive, got {value}")
    return value


def _list(key: str, text: str, fn) -> List:
    items = [s.strip() for s in text.split(",") if s.strip()]
    return [_parse(key, s, fn) for s in items]


def _bool(key: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {text!r}")


def _check_seed(key: str, seed: int) -> int:
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(key, f"must be a 64-bit unsigned integer, got {seed}")
    return seed


def _model_section(section) -> ModelSection:
    if "family" not in section:
        raise ConfigError("model.family", "missing")
    if "alpha" not in section:
        raise ConfigError("model.alpha", "missing")
    family = _parse("model.family", section["family"], Family.from_string)
    kwargs = {
        "family": family,
        "alpha": _float("model.alpha", section["alpha"], positive=True),
        "dim": _int("model.dim", section.get("dim", "1"), minimum=1),
        "spectral": section.get("spectral", "positive").strip(),
        "coefficients": section.get("coefficients", "").strip(),
        "coeff_mode": section.get("coeff_mode", "deterministic").strip().lower(),
        "coeff_law": section.get("coeff_law", "").strip(),
        "burn_in": _int("model.burn_in", section.get("burn_in", "1000"), minimum=1),
        "norm": section.get("norm", "euclidean").strip(),
    }
    if "beta" in section:
        kwargs["beta"] = _float("model.beta", section["beta"], positive=True)
    if "a" in section:
        kwargs["a"] = section["a"].strip()
    if "a_law" in section:
        kwargs["a_law"] = section["a_law"].strip()
    if family == Family.MMA and not kwargs["coefficients"]:
        raise ConfigError("model.coefficients", "required for the mma family")
    if family == Family.RCAR and not kwargs.get("a"):
        raise ConfigError("model.a", "required for the rcar family")
    return ModelSection(**kwargs)


def _run_section(section) -> RunSection:
    if "n" not in section:
        raise ConfigError("run.n", "missing")
    return RunSection(
        n=_int("run.n", section["n"], minimum=1),
        replicates=_int("run.replicates", section.get("replicates", "1"), minimum=1),
        master_seed=_check_seed("run.master_seed", _int("run.master_seed", section.get("master_seed", "0"))),
        workers=_int("run.workers", section["workers"], minimum=1) if "workers" in section else default_workers(),
    )


def _analysis_section(section, base_dir: Path) -> AnalysisSection:
    kwargs = {}
    if "operations" in section:
        ops = _list("analysis.operations", section["operations"], Operation.from_string)
        if not ops:
            raise ConfigError("analysis.operations", "must name at least one operation")
        kwargs["operations"] = tuple(ops)
    if "k" in section:
        kwargs["k"] = _int("analysis.k", section["k"], minimum=1)
    if "quantile" in section:
        q = _float("analysis.quantile", section["quantile"])
        if not 0.0 < q < 1.0:
            raise ConfigError("analysis.quantile", f"must lie in (0, 1), got {q}")
        kwargs["quantile"] = q
    if "r_rule" in section:
        kwargs["r_rule"] = _parse("analysis.r_rule", section["r_rule"], BlockSpec.from_string)
    if "levels" in section:
        levels = _list("analysis.levels", section["levels"], float)
        if not levels or any(u < 1.0 for u in levels):
            raise ConfigError("analysis.levels", f"needs values >= 1, got {levels}")
        kwargs["levels"] = tuple(levels)
    for key, minimum in (("horizon", 1), ("n_mc", 1), ("shards", 1), ("lag", 1), ("n_boot", 0),
                         ("max_cluster_size", 1)):
        if key in section:
            kwargs[key] = _int(f"analysis.{key}", section[key], minimum=minimum)
    if "window" in section:
        window = _list("analysis.window", section["window"], int)
        if len(window) != 2 or not window[0] <= 0 <= window[1]:
            raise ConfigError("analysis.window", f"expected 's, t' with s <= 0 <= t, got {section['window']}")
        kwargs["window"] = (window[0], window[1])
    if "m_list" in section:
        m_list = _list("analysis.m_list", section["m_list"], int)
        if not m_list or any(b <= a for a, b in zip(m_list, m_list[1:])):
            raise ConfigError("analysis.m_list", f"must be strictly increasing, got {m_list}")
        kwargs["m_list"] = tuple(m_list)
    if "functionals" in section:
        path = Path(section["functionals"].strip())
        kwargs["functionals"] = path if path.is_absolute() else base_dir / path
    if "projection" in section:
        kwargs["projection"] = tuple(_list("analysis.projection", section["projection"], float))
    if "sided" in section:
        kwargs["sided"] = section["sided"].strip().lower()
    if "time_change_lags" in section:
        kwargs["time_change_lags"] = tuple(_list("analysis.time_change_lags", section["time_change_lags"], int))
    if "corrected" in section:
        kwargs["corrected"] = _bool("analysis.corrected", section["corrected"])
    for key in ("eps", "agreement_tolerance", "tv_tolerance"):
        if key in section:
            kwargs[key] = _float(f"analysis.{key}", section[key], positive=True)
    return AnalysisSection(**kwargs)


def _output_section(section) -> OutputSection:
    directory = Path(section["directory"].strip()) if "directory" in section else default_output_dir()
    fmt = _parse("output.format", section.get("format", "csv"), OutputFormat.from_string)
    save_paths = _bool("output.save_paths", section["save_paths"]) if "save_paths" in section else True
    return OutputSection(directory=directory, format=fmt, save_paths=save_paths)


def parse_ladder(entries: Sequence[str]) -> Dict[str, List[str]]:
    """
    `KEY=V1,V2,...` の並びを {section.key: [値]} にする。キーは検証済み。
    """
    ladder: Dict[str, List[str]] = {}
    for entry in entries:
        if "=" not in entry:
            raise ConfigError(entry, "ladder entries must look like KEY=V1,V2,...")
        key, values = entry.split("=", 1)
        section, name = resolve_key(key.strip())
        items = [v.strip() for v in values.split(",") if v.strip()]
        if not items:
            raise ConfigError(f"{section}.{name}", "ladder needs at least one value")
        ladder[f"{section}.{name}"] = items
    return ladder
