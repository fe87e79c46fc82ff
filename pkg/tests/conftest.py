import numpy as np
import pytest

from core import RadialLaw, RngStream, RVLaw, positive_unit
from models import MMASpec, PathMatrix, RCARSpec, simulate_mma
from utils import set_quiet

@pytest.fixture(autouse=True)
def quiet():
    set_quiet(True)
    yield
    set_quiet(False)


@pytest.fixture
def stream() -> RngStream:
    return RngStream(12345)


@pytest.fixture
def pareto_law() -> RVLaw:
    return RVLaw(RadialLaw(1.0), positive_unit())


@pytest.fixture
def ma1_spec() -> MMASpec:
    """X_t = ξ_t + ξ_{t-1}, ξ ~ Pareto(1)"""
    return MMASpec.univariate([1.0, 1.0], alpha=1.0)


@pytest.fixture
def rcar_spec(pareto_law) -> RCARSpec:
    return RCARSpec.scalar(0.5, pareto_law, burn_in=500)


@pytest.fixture(scope="session")
def ma1_path() -> PathMatrix:
    """中規模の MA(1) パス (n = 2·10^5)。推定量のテストで共有する"""
    return simulate_mma(MMASpec.univariate([1.0, 1.0], alpha=1.0), 200_000, RngStream(2024))


@pytest.fixture
def tiny_path() -> PathMatrix:
    """ノルムが 5, 4, 3, 2, 1 の 1 次元パス"""
    return PathMatrix(np.array([5.0, 4.0, 3.0, 2.0, 1.0]), model_id="tiny")
