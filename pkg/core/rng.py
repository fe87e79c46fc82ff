from dataclasses import dataclass, field
from typing import Tuple, Union
import numpy as np

from errors import InvalidParameterError

_UINT64 = 2 ** 64


@dataclass(frozen=True)
class RngStream:
    """
    再現可能な乱数ストリーム。

    (master_seed, stream_id, path) が出力列を完全に決定する。内部では
    SeedSequence の spawn_key を使ったカウンタベースの Philox 生成器を作るため、
    異なる stream_id / path は統計的に独立なストリームになる。
    """
    master_seed: int
    stream_id: int = 0
    path: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        for name, value in (("master_seed", self.master_seed), ("stream_id", self.stream_id)):
            if not 0 <= int(value) < _UINT64:
                raise InvalidParameterError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def child(self, index: int) -> "RngStream":
        """独立なサブストリームを返す"""
        if index < 0:
            raise InvalidParameterError(f"substream index must be nonnegative, got {index}")
        return RngStream(self.master_seed, self.stream_id, self.path + (int(index),))

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=int(self.master_seed),
                                      spawn_key=(int(self.stream_id),) + self.path)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def describe(self) -> str:
        suffix = "".join(f"/{p}" for p in self.path)
        return f"{self.master_seed}:{self.stream_id}{suffix}"


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """RngStream なら新しい Generator を作り、Generator ならそのまま返す"""
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng
