import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional
import numpy as np

from errors import InvalidParameterError
from core.norms import NormSpec, norm
from core.rng import RngStream
from utils import save_to_file, read_from_file


@dataclass(frozen=True, eq=False)
class PathMatrix:
    """
    シミュレーションされた定常パス (n 時点 × d 座標)。生成後は読み取り専用。

    Attributes:
        data (np.ndarray): n×d の実数配列 (すべて有限)
        model_id (str): モデルの記述子
        seed (Optional[RngStream]): 生成に使った乱数ストリーム
        metadata (Dict[str, str]): alpha など付随情報
    """
    data: np.ndarray
    model_id: str
    seed: Optional[RngStream] = None
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise InvalidParameterError(f"path data must be an n×d array with n >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.argmax(~np.all(np.isfinite(arr), axis=1)))
            raise InvalidParameterError(f"path of {self.model_id} has a non-finite entry at t={bad + 1}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])

    def norms(self, norm_spec: Optional[NormSpec] = None) -> np.ndarray:
        """各時点のノルム ||X_t|| (長さ n)"""
        return np.asarray(norm(self.data, norm_spec or NormSpec.euclidean())).reshape(self.n)

    def to_csv_text(self) -> str:
        """ヘッダー `t,x1,...,xd`、有効数字 17 桁"""
        header = ",".join(["t"] + [f"x{j + 1}" for j in range(self.d)])
        table = np.column_stack([np.arange(1, self.n + 1), self.data])
        buf = io.StringIO()
        fmt = ["%d"] + ["%.17g"] * self.d
        np.savetxt(buf, table, fmt=fmt, delimiter=",", header=header, comments="")
        return buf.getvalue()

    def metadata_text(self) -> str:
        """key=value 形式のサイドカー (model, seed, n, alpha, その他)"""
        entries = {
            "model": self.model_id,
            "seed": self.seed.describe() if self.seed is not None else "none",
            "n": str(self.n),
            "alpha": self.metadata.get("alpha", "unknown"),
        }
        for key in sorted(self.metadata):
            entries.setdefault(key, self.metadata[key])
        return "".join(f"{key}={value}\n" for key, value in entries.items())

    def save(self, csv_path: Path) -> None:
        save_to_file(self.to_csv_text(), csv_path)
        save_to_file(self.metadata_text(), csv_path.with_suffix(".meta"))

    @staticmethod
    def load(csv_path: Path) -> Optional["PathMatrix"]:
        """
        CSV とサイドカーから読み込む。どちらかが無ければ None。
        """
        csv_text = read_from_file(csv_path)
        meta_text = read_from_file(csv_path.with_suffix(".meta"))
        if csv_text is None or meta_text is None:
            return None
        return PathMatrix.from_text(csv_text, meta_text)

    @staticmethod
    def from_text(csv_text: str, meta_text: str) -> "PathMatrix":
        table = np.loadtxt(io.StringIO(csv_text), delimiter=",", skiprows=1, ndmin=2)
        meta: Dict[str, str] = {}
        for line in meta_text.splitlines():
            if "=" in line:
                key, value = line.split("=", 1)
                meta[key.strip()] = value.strip()
        model_id = meta.pop("model", "unknown")
        seed = _parse_seed(meta.pop("seed", "none"))
        meta.pop("n", None)
        return PathMatrix(table[:, 1:], model_id=model_id, seed=seed, metadata=meta)


def _parse_seed(text: str) -> Optional[RngStream]:
    if text == "none" or ":" not in text:
        return None
    master, rest = text.split(":", 1)
    parts = rest.split("/")
    return RngStream(int(master), int(parts[0]), tuple(int(p) for p in parts[1:]))
