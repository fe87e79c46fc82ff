import numpy as np
import pytest
from scipy import stats

from errors import DegenerateThresholdError, InvalidParameterError
from core import (
    NormSpec,
    RadialLaw,
    RngStream,
    RVLaw,
    hill_estimator,
    norm,
    operator_norm,
    pareto_ks_test,
    point_masses,
    pushforward,
    sample_pareto,
    symmetric_unit,
    uniform_sphere,
)


class TestRngStream:

    def test_same_stream_is_reproducible(self):
        a = RngStream(7).child(3).generator().random(16)
        b = RngStream(7).child(3).generator().random(16)
        np.testing.assert_array_equal(a, b)

    def test_children_differ(self):
        root = RngStream(7)
        assert not np.array_equal(root.child(0).generator().random(16), root.child(1).generator().random(16))

    def test_stream_id_separates_streams(self):
        assert not np.array_equal(RngStream(7, 0).generator().random(8), RngStream(7, 1).generator().random(8))

    def test_describe(self):
        assert RngStream(7, 2).child(1).child(4).describe() == "7:2/1/4"

    def test_rejects_negative_seed(self):
        with pytest.raises(InvalidParameterError):
            RngStream(-1)

    def test_rejects_negative_child(self):
        with pytest.raises(InvalidParameterError):
            RngStream(1).child(-1)


class TestRadialLaw:

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_empirical_survival(self, alpha):
        law = RadialLaw(alpha)
        draws = sample_pareto(law, RngStream(11), 200_000)
        for y in (2.0, 5.0, 10.0):
            p = y ** -alpha
            se = np.sqrt(p * (1 - p) / len(draws))
            assert abs(np.mean(draws > y) - p) <= 4 * se

    def test_radii_at_least_one(self):
        draws = sample_pareto(RadialLaw(2.0), RngStream(3), 10_000)
        assert np.min(draws) >= 1.0

    @pytest.mark.parametrize("alpha", [0.0, -1.0, float("inf"), float("nan")])
    def test_invalid_alpha(self, alpha):
        with pytest.raises(InvalidParameterError):
            RadialLaw(alpha)

    def test_survival_below_one(self):
        assert RadialLaw(1.0).survival(0.5) == 1.0

    @pytest.mark.parametrize("alpha", [np.int64(2), np.float32(1.5), 3, 0.75])
    def test_numpy_and_python_reals(self, alpha):
        assert RadialLaw(alpha).survival(2.0) == pytest.approx(2.0 ** -float(alpha))

    @pytest.mark.parametrize("alpha", [True, "1", None])
    def test_non_real_alpha(self, alpha):
        with pytest.raises(InvalidParameterError):
            RadialLaw(alpha)


class TestNorms:

    def test_euclidean(self):
        assert norm(np.array([3.0, 4.0]), NormSpec.euclidean()) == pytest.approx(5.0)

    def test_block_max(self):
        spec = NormSpec.block_max(NormSpec.euclidean(), 2)
        assert norm(np.array([3.0, 4.0, 0.0, 1.0]), spec) == pytest.approx(5.0)

    @pytest.mark.parametrize("spec", [NormSpec.euclidean(), NormSpec.maximum(),
                                      NormSpec.block_max(NormSpec.maximum(), 2)])
    def test_norm_axioms_on_random_pairs(self, spec):
        gen = np.random.default_rng(13)
        x = gen.standard_cauchy((2000, 4))
        y = gen.standard_cauchy((2000, 4))
        c = gen.normal(scale=5.0, size=(2000, 1))
        nx, ny = np.asarray(norm(x, spec)), np.asarray(norm(y, spec))
        np.testing.assert_allclose(np.asarray(norm(c * x, spec)), np.abs(c[:, 0]) * nx, rtol=1e-12)
        assert np.all(np.asarray(norm(x + y, spec)) <= (nx + ny) * (1 + 1e-12))
        assert np.all(nx > 0)
        assert norm(np.zeros(4), spec) == 0.0

    def test_block_max_needs_divisible_length(self):
        with pytest.raises(InvalidParameterError):
            norm(np.array([1.0, 2.0, 3.0]), NormSpec.block_max(NormSpec.euclidean(), 2))

    def test_from_string(self):
        assert NormSpec.from_string("max") == NormSpec.maximum()
        assert NormSpec.from_string("block-max:euclidean:2") == NormSpec.block_max(NormSpec.euclidean(), 2)
        with pytest.raises(InvalidParameterError):
            NormSpec.from_string("l7")

    def test_from_string_aliases(self):
        assert NormSpec.from_string("L2") == NormSpec.euclidean()
        assert NormSpec.from_string("sup") == NormSpec.maximum()
        for text in ("abs", "block-max:euclidean:two"):
            with pytest.raises(InvalidParameterError, match="Valid norms"):
                NormSpec.from_string(text)

    def test_operator_norm_identity(self):
        assert operator_norm(np.eye(2), NormSpec.euclidean(), NormSpec.euclidean()) == pytest.approx(1.0)

    def test_operator_norm_diagonal(self):
        A = np.diag([2.0, 0.5])
        assert operator_norm(A, NormSpec.euclidean(), NormSpec.euclidean()) == pytest.approx(2.0)

    def test_operator_norm_max_to_max_is_row_sum(self):
        A = np.array([[1.0, -2.0], [0.5, 0.5]])
        assert operator_norm(A, NormSpec.maximum(), NormSpec.maximum()) == pytest.approx(3.0)

    def test_operator_norm_zero(self):
        assert operator_norm(np.zeros((2, 2)), NormSpec.maximum(), NormSpec.euclidean()) == 0.0


class TestSpectralMeasures:

    def test_uniform_circle_is_centered(self):
        draws = uniform_sphere(2).sample(RngStream(5), 100_000)
        se = np.std(draws, axis=0) / np.sqrt(len(draws))
        assert np.all(np.abs(np.mean(draws, axis=0)) <= 3 * se)

    def test_point_masses_normalize(self):
        measure = point_masses([[2.0, 0.0], [0.0, 3.0]], [1.0, 3.0])
        draws = measure.sample(RngStream(1), 1000)
        np.testing.assert_allclose(np.linalg.norm(draws, axis=1), 1.0)
        pts, w = measure.support
        np.testing.assert_allclose(w, [0.25, 0.75])

    def test_point_masses_reject_zero_vector(self):
        with pytest.raises(InvalidParameterError):
            point_masses([[0.0, 0.0]])

    def test_pushforward_lands_on_max_sphere(self):
        measure = pushforward(lambda gen, n: gen.standard_normal((n, 3)), 3, NormSpec.maximum())
        draws = measure.sample(RngStream(2), 500)
        np.testing.assert_allclose(np.max(np.abs(draws), axis=1), 1.0)

    def test_symmetric_weights(self):
        draws = symmetric_unit(0.8).sample(RngStream(4), 50_000)
        p = np.mean(draws[:, 0] > 0)
        assert abs(p - 0.8) <= 4 * np.sqrt(0.8 * 0.2 / 50_000)

    def test_marginal_tail_of_two_point_law(self):
        law = RVLaw(RadialLaw(1.0), point_masses([[1.0, 0.0], [0.0, 1.0]]))
        v = law.sample(RngStream(8), 1_000_000)
        p = np.mean(v[:, 0] > 10.0)
        se = np.sqrt(0.05 * 0.95 / len(v))
        assert abs(p - 0.05) <= 3 * se


class TestHill:

    def test_recovers_alpha(self):
        draws = sample_pareto(RadialLaw(2.0), RngStream(9), 100_000)
        alpha_hat, se = hill_estimator(draws, 2000)
        assert abs(alpha_hat - 2.0) <= 4 * se

    def test_needs_valid_k(self):
        with pytest.raises(InvalidParameterError):
            hill_estimator(np.arange(1.0, 6.0), 5)

    def test_tied_top_order_statistics(self):
        values = np.r_[np.full(4, 3.0), 1.0, 2.0]
        with pytest.raises(DegenerateThresholdError, match="tied"):
            hill_estimator(values, 3)
        assert np.isfinite(hill_estimator(values, 4)[0])

    def test_ks_accepts_pareto(self):
        draws = sample_pareto(RadialLaw(1.5), RngStream(10), 5000)
        assert pareto_ks_test(draws, 1.5).pvalue > 0.01

    def test_ks_rejects_wrong_alpha(self):
        draws = sample_pareto(RadialLaw(1.0), RngStream(10), 5000)
        assert pareto_ks_test(draws, 3.0).pvalue < 0.01

    def test_ks_matches_scipy(self):
        draws = sample_pareto(RadialLaw(1.0), RngStream(12), 200)
        expected = stats.kstest(draws, stats.pareto(b=1.0).cdf)
        assert pareto_ks_test(draws, 1.0).statistic == pytest.approx(expected.statistic)
