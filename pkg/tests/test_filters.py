import numpy as np
import pytest

from core import RngStream
from models import PathMatrix
from analytics import ThetaMethod
from analytics.cluster_size_law import ClusterSizeLaw
from analytics.laplace_functional import LaplaceResult
from analytics.time_change import IdentityCheck
from analytics.windows import MCValue, ThetaEstimate
from estimators import ThresholdSpec, empirical_tail_process, extract_clusters, select_threshold
from filters import (
    CheckResult,
    cluster_law_coherence_filter,
    cluster_size_tv_filter,
    identity_filter,
    laplace_coherence_filter,
    pareto_anchor_filter,
    runs_blocks_agreement_filter,
    spectral_anchor_filter,
    stream_independence_filter,
    tail_equivalence_filter,
    theta_coherence_filter,
)


def estimate(value: float, method: ThetaMethod = ThetaMethod.RUNS, se: float = 0.01) -> ThetaEstimate:
    return ThetaEstimate(value=value, std_error=se, method=method, n_samples=100)


def size_law(kappa, theta=0.5, theta_se=0.01, **details) -> ClusterSizeLaw:
    kappa = np.asarray(kappa, dtype=float)
    return ClusterSizeLaw(nu=np.r_[theta, 1.0 - theta], nu_se=np.zeros(2), kappa=kappa, theta=theta,
                          theta_se=theta_se, tail_bound=0.0, n_samples=1000, details=details)


@pytest.fixture
def small_path() -> PathMatrix:
    return PathMatrix(np.array([0.1, 5.0, 6.0, 0.2, 0.3, 7.0, 0.4, 0.5]), model_id="small")


@pytest.fixture
def small_threshold(small_path) -> ThresholdSpec:
    return select_threshold(small_path, ThresholdSpec.order_statistic(3))


class TestCheckResult:

    def test_status_and_record(self):
        check = CheckResult("demo", 0.1, 0.2, True, "ok")
        assert check.status == "OK"
        assert check.to_record() == {"check": "demo", "statistic": 0.1, "tolerance": 0.2,
                                     "status": "OK", "detail": "ok"}
        assert check.format_row().endswith("OK")
        assert CheckResult("demo", 1.0, 0.2, False).status == "FAIL"


class TestRunsBlocksAgreement:

    def test_within_tolerance(self):
        check = runs_blocks_agreement_filter(estimate(0.50), estimate(0.53, ThetaMethod.BLOCKS))
        assert check.passed
        assert check.statistic == pytest.approx(0.03)

    def test_outside_tolerance(self):
        assert not runs_blocks_agreement_filter(estimate(0.4), estimate(0.6, ThetaMethod.BLOCKS)).passed


class TestThetaCoherence:

    def test_pooled_standard_error(self):
        closed = ThetaEstimate(0.5, 0.0, ThetaMethod.CLOSED_FORM, 0)
        check = theta_coherence_filter(estimate(0.52, ThetaMethod.MC_FORWARD, se=0.01), closed)
        assert check.tolerance == pytest.approx(0.03)
        assert check.passed
        assert not theta_coherence_filter(estimate(0.55, ThetaMethod.MC_FORWARD, se=0.01), closed).passed

    def test_absolute_tolerance(self):
        closed = ThetaEstimate(0.5, 0.0, ThetaMethod.CLOSED_FORM, 0)
        check = theta_coherence_filter(estimate(0.58), closed, name="runs-vs-theta", absolute=0.1)
        assert check.name == "runs-vs-theta"
        assert check.tolerance == 0.1
        assert check.passed


class TestClusterLaw:

    def test_agrees_with_reference(self):
        law = size_law([0.0, 1.0], theta=0.5, theta_reference=0.51, theta_reference_se=0.01)
        assert cluster_law_coherence_filter(law).passed

    def test_missing_reference(self):
        check = cluster_law_coherence_filter(size_law([0.0, 1.0]))
        assert not check.passed
        assert "no reference" in check.detail

    def test_size_tv(self, small_path, small_threshold):
        partition = extract_clusters(small_path, small_threshold, 4)
        assert cluster_size_tv_filter(partition, size_law([0.5, 0.5])).statistic == pytest.approx(0.0)
        check = cluster_size_tv_filter(partition, size_law([0.0, 1.0]))
        assert check.statistic == pytest.approx(0.5)
        assert not check.passed

    def test_size_tv_truncated_mass(self, small_path, small_threshold):
        partition = extract_clusters(small_path, small_threshold, 4)
        # 打ち切られた 0.5 は最後のサイズに入る
        check = cluster_size_tv_filter(partition, size_law([0.5, 0.0]))
        assert check.statistic == pytest.approx(0.0)


class TestLaplaceCoherence:

    def test_general_only(self):
        result = LaplaceResult("capped-half", MCValue(0.8, 0.01, 100), None)
        check = laplace_coherence_filter(result)
        assert check.passed
        assert check.name == "laplace-coherence[capped-half]"

    def test_disagreement(self):
        result = LaplaceResult("indicator-1", MCValue(0.80, 0.01, 100), MCValue(0.70, 0.01, 100))
        assert not laplace_coherence_filter(result).passed


class TestIdentity:

    def test_identity(self):
        agree = IdentityCheck("lag-reversal", MCValue(0.5, 0.01, 100), MCValue(0.51, 0.01, 100))
        assert identity_filter(agree).passed
        disagree = IdentityCheck("lag-reversal", MCValue(0.5, 0.01, 100), MCValue(0.6, 0.01, 100))
        check = identity_filter(disagree)
        assert not check.passed
        assert check.statistic == pytest.approx(0.1)


class TestAnchors:

    def test_spectral_anchor(self, small_path, small_threshold):
        process = empirical_tail_process(small_path, small_threshold, -1, 1)
        assert spectral_anchor_filter(process).passed

    def test_pareto_anchor(self, ma1_path):
        threshold = select_threshold(ma1_path, ThresholdSpec.order_statistic(400))
        process = empirical_tail_process(ma1_path, threshold, 0, 0)
        assert pareto_anchor_filter(process, 1.0).passed
        # alpha を大きく取り違えると棄却される
        assert not pareto_anchor_filter(process, 4.0).passed


class TestTailEquivalence:

    def test_relative_deviation(self):
        assert tail_equivalence_filter(MCValue(2.1, 0.05, 1000), 2.0).passed
        check = tail_equivalence_filter(MCValue(2.5, 0.05, 1000), 2.0)
        assert check.statistic == pytest.approx(0.25)
        assert not check.passed


class TestStreamIndependence:

    def test_child_streams(self):
        assert stream_independence_filter(RngStream(1).child).passed

    def test_corrupted_splitter(self):
        check = stream_independence_filter(lambda i: RngStream(1))
        assert not check.passed
        assert check.statistic == pytest.approx(1.0)
