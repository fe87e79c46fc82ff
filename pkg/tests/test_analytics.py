import math

import numpy as np
import pytest

from errors import CoherenceError, DegenerateModelError, DegenerateProjectionError, InvalidParameterError
from core import NormSpec, RadialLaw, RngStream, RVLaw, point_masses, positive_unit, symmetric_unit, uniform_sphere
from models import MMASpec, RCARSpec, ScaleLaw, stationary_spectral_measure
from analytics import (
    TIME_CHANGE_BATTERY,
    IIDSpectralSampler,
    MMASpectralSampler,
    RatioMoments,
    RCARForwardSampler,
    Sided,
    ThetaEstimate,
    ThetaMethod,
    breiman_constant,
    cluster_size_law,
    extremal_index_limit,
    indicator,
    lag_reversal_check,
    laplace_functional,
    linear_projection_theta,
    mma_spectral_window,
    mma_tail_constant,
    mma_theta,
    mma_theta_branch_form,
    parse_functional_manifest,
    rcar_forward_tail,
    rcar_theta_closed_form,
    run_sharded,
    theta_forward,
    time_change_check,
    univariate_positive_theta,
    zero_functional,
)
from analytics.functionals import WindowFunctional, battery_functional

N_MC = 20_000
SHARDS = 4


class TestMonteCarlo:

    def test_ratio_of_constants(self):
        moments = RatioMoments.from_draws(np.ones(10), np.full(10, 2.0))
        value, se = moments.ratio(0)
        assert value == pytest.approx(0.5)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_merge_matches_single_batch(self):
        gen = np.random.default_rng(0)
        a, b = gen.random(100), gen.random(100) + 0.5
        whole = RatioMoments.from_draws(a, b)
        parts = RatioMoments.from_draws(a[:40], b[:40]).merge(RatioMoments.from_draws(a[40:], b[40:]))
        assert parts.ratio(0)[0] == pytest.approx(whole.ratio(0)[0])
        assert parts.ratio(0)[1] == pytest.approx(whole.ratio(0)[1])

    def test_worker_count_does_not_change_result(self):
        def _kernel(stream, size):
            x = stream.generator().random(size)
            return x[:, None], np.ones(size)

        one = run_sharded(_kernel, 10_000, RngStream(5), shards=8, workers=1)
        four = run_sharded(_kernel, 10_000, RngStream(5), shards=8, workers=4)
        assert one.ratio(0) == four.ratio(0)

    def test_rejects_empty_run(self):
        with pytest.raises(InvalidParameterError):
            run_sharded(lambda s, n: (np.ones(n), np.ones(n)), 0, RngStream(1))


class TestMMAAnalytic:

    def test_closed_form_ma1(self, ma1_spec):
        theta = mma_theta(ma1_spec, N_MC, RngStream(1))
        assert theta.method == ThetaMethod.CLOSED_FORM
        assert theta.value == pytest.approx(0.5)
        assert theta.std_error == 0.0

    @pytest.mark.parametrize("c, alpha, expected", [(2.0, 1.0, 2.0 / 3.0), (1.0, 2.0, 0.5), (0.5, 1.0, 2.0 / 3.0)])
    def test_closed_form_family(self, c, alpha, expected):
        theta = mma_theta(MMASpec.univariate([1.0, c], alpha=alpha), N_MC, RngStream(1))
        assert theta.value == pytest.approx(expected)

    def test_tail_constant(self, ma1_spec):
        assert mma_tail_constant(ma1_spec, N_MC, RngStream(1)).value == pytest.approx(2.0)

    def test_degenerate_model(self):
        with pytest.raises(DegenerateModelError):
            mma_theta(MMASpec.univariate([0.0, 0.0], alpha=1.0), N_MC, RngStream(1))

    def test_spectral_windows_ma1(self, ma1_spec):
        windows = mma_spectral_window(ma1_spec, -1, 1, RngStream(2))
        assert len(windows) == 2
        np.testing.assert_allclose(windows[0].values[:, 0], [0.0, 1.0, 1.0])
        np.testing.assert_allclose(windows[1].values[:, 0], [1.0, 1.0, 0.0])
        assert all(w.check_anchor(ma1_spec.norm_spec) for w in windows)

    def test_branch_form_matches_closed_form(self, ma1_spec):
        branch = mma_theta_branch_form(ma1_spec, N_MC, RngStream(3), shards=SHARDS)
        assert branch.value == pytest.approx(0.5)

    def test_random_coefficients_monte_carlo(self):
        # C_i(t) = U c_i with U uniform on (0.5, 1.5): symmetric around the deterministic case
        base = np.array([1.0, 1.0])[:, None, None]
        innovation = RVLaw(RadialLaw(1.0), positive_unit())
        spec = MMASpec.random(lambda gen, n: gen.uniform(0.5, 1.5, size=(n, 2, 1, 1)) * base[None],
                              m=1, d=1, q=1, innovation=innovation, beta=2.0)
        telescoped = mma_theta(spec, 50_000, RngStream(4), shards=SHARDS)
        branch = mma_theta_branch_form(spec, 50_000, RngStream(5), shards=SHARDS)
        forward = theta_forward(MMASpectralSampler(spec), 3, 50_000, RngStream(6), shards=SHARDS)
        se = math.sqrt(telescoped.std_error ** 2 + branch.std_error ** 2)
        assert telescoped.method == ThetaMethod.MC_MMA
        assert abs(telescoped.value - branch.value) <= 4 * se
        assert abs(telescoped.value - forward.value) <= 4 * math.hypot(telescoped.std_error, forward.std_error)

    def test_closed_form_matches_monte_carlo(self):
        spectral = point_masses([[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]], [0.5, 0.3, 0.2])
        coefficients = np.stack([np.eye(2), np.array([[0.5, 1.0], [0.0, 2.0]]), np.array([[-1.5, 0.0], [0.3, 0.3]])])
        spec = MMASpec.deterministic(coefficients, RVLaw(RadialLaw(1.5), spectral))
        closed = mma_theta(spec, N_MC, RngStream(40))
        assert closed.method == ThetaMethod.CLOSED_FORM
        forward = theta_forward(MMASpectralSampler(spec), spec.m, 50_000, RngStream(41), shards=SHARDS)
        branch = mma_theta_branch_form(spec, 50_000, RngStream(42), shards=SHARDS)
        for estimate in (forward, branch):
            assert estimate.std_error > 0
            assert abs(estimate.value - closed.value) <= 4 * estimate.std_error


class TestThetaForward:

    def test_ma1(self, ma1_spec):
        theta = theta_forward(MMASpectralSampler(ma1_spec), 5, N_MC, RngStream(7), shards=SHARDS)
        assert theta.value == pytest.approx(0.5)
        assert theta.details["truncation"] == "none"

    def test_iid_is_one(self, pareto_law):
        theta = theta_forward(IIDSpectralSampler(pareto_law), 3, N_MC, RngStream(8), shards=SHARDS)
        assert theta.value == pytest.approx(1.0)

    def test_rcar_matches_closed_form(self, rcar_spec):
        sampler = RCARForwardSampler(rcar_spec)
        theta = theta_forward(sampler, 30, N_MC, RngStream(9), shards=SHARDS)
        assert theta.value == pytest.approx(rcar_theta_closed_form(rcar_spec).value, abs=1e-9)
        assert theta.details["truncation"].startswith("horizon=30")

    def test_uniform_sphere_bivariate_ma1(self):
        innovation = RVLaw(RadialLaw(1.0), uniform_sphere(2))
        spec = MMASpec.deterministic(np.stack([np.eye(2), np.diag([2.0, 0.5])]), innovation)
        closed = mma_theta(spec, 50_000, RngStream(10), shards=SHARDS)
        forward = theta_forward(MMASpectralSampler(spec), 2, 50_000, RngStream(11), shards=SHARDS)
        assert abs(closed.value - forward.value) <= 4 * math.hypot(closed.std_error, forward.std_error) + 1e-9

    def test_horizon_validation(self, ma1_spec):
        with pytest.raises(InvalidParameterError):
            theta_forward(MMASpectralSampler(ma1_spec), 0, N_MC, RngStream(1))

    def test_strict_raises_on_disagreement(self, ma1_spec, monkeypatch):
        import importlib
        module = importlib.import_module("analytics.theta_forward")

        def _fake_sups(powered, s):
            sup0 = np.max(powered, axis=-1)
            return sup0, 2.0 * sup0

        monkeypatch.setattr(module, "forward_sups", _fake_sups)
        with pytest.raises(CoherenceError):
            theta_forward(MMASpectralSampler(ma1_spec), 2, N_MC, RngStream(1), shards=SHARDS)


class TestRCARAnalytic:

    def test_closed_form(self, rcar_spec):
        theta = rcar_theta_closed_form(rcar_spec)
        assert theta.value == pytest.approx(0.5)
        assert theta.std_error == 0.0

    def test_negative_coefficient_uses_modulus(self, pareto_law):
        assert rcar_theta_closed_form(RCARSpec.scalar(-0.5, pareto_law)).value == pytest.approx(0.5)

    def test_forward_tail_geometric(self, rcar_spec):
        window = rcar_forward_tail(rcar_spec, 5, RngStream(1), radius=8.0, theta0=np.array([1.0]))
        np.testing.assert_allclose(window.values[:, 0], 8.0 * 0.5 ** np.arange(6))
        assert window.truncation == "horizon"

    def test_forward_tail_eps_stop(self, rcar_spec):
        window = rcar_forward_tail(rcar_spec, 20, RngStream(1), eps=1.0, radius=8.0, theta0=np.array([1.0]))
        assert window.truncation == "eps"
        assert window.t == 4

    def test_sampler_needs_stationary_spectral(self):
        spec = RCARSpec.scalar(0.5, RVLaw(RadialLaw(1.0), symmetric_unit()))
        with pytest.raises(InvalidParameterError):
            RCARForwardSampler(spec)

    def test_forward_only(self, rcar_spec):
        assert not RCARForwardSampler(rcar_spec).two_sided
        with pytest.raises(InvalidParameterError):
            RCARForwardSampler(rcar_spec).sample(np.random.default_rng(0), 4, -1, 1)

    def test_spectral_norm_must_match_model_norm(self):
        measure = point_masses([[1.0, 0.5]], norm_tag=NormSpec.maximum())
        with pytest.raises(InvalidParameterError, match="model norm"):
            RCARSpec(d=2, ab_sampler=lambda gen, n: (np.zeros((n, 2, 2)), np.ones((n, 2))), alpha=1.0,
                     stationary_spectral=measure)
        spec = RCARSpec.matrix(0.5 * np.eye(2), RVLaw(RadialLaw(1.0), uniform_sphere(2)))
        with pytest.raises(InvalidParameterError, match="model norm"):
            RCARForwardSampler(spec, spectral=measure)

    def test_stationary_sign_alternates(self, pareto_law):
        # a = -0.5: 偶数ラグは正、奇数ラグは負。正の質量は sum 4^{-j} / sum 2^{-j} = 2/3
        measure = stationary_spectral_measure(np.array([[-0.5]]), pareto_law, None, NormSpec.euclidean())
        draws = measure.sample(np.random.default_rng(0), 20_000)[:, 0]
        assert np.mean(draws > 0) == pytest.approx(2.0 / 3.0, abs=0.02)

    def test_stationary_random_sign(self, pareto_law):
        # U ~ U(-1, 1), A = 0.5: ラグ j の重み 0.25^j、j >= 1 の符号は五分五分
        measure = stationary_spectral_measure(np.array([[0.5]]), pareto_law, ScaleLaw.uniform(-1.0, 1.0),
                                              NormSpec.euclidean())
        draws = measure.sample(np.random.default_rng(1), 20_000)[:, 0]
        assert np.mean(draws > 0) == pytest.approx(0.875, abs=0.02)



class TestClusterSizeLaw:

    def test_ma1_point_mass_at_two(self, ma1_spec):
        law = cluster_size_law(MMASpectralSampler(ma1_spec), 5, N_MC, RngStream(12), shards=SHARDS)
        assert law.theta == pytest.approx(0.5)
        assert law.kappa_prob(2) == pytest.approx(1.0)
        assert law.kappa_prob(1) == pytest.approx(0.0)
        assert law.mean_size == pytest.approx(2.0)
        assert law.agrees

    def test_rcar_geometric_nu(self, rcar_spec):
        law = cluster_size_law(RCARForwardSampler(rcar_spec), 30, 100_000, RngStream(13), shards=SHARDS)
        for k in range(6):
            assert abs(law.nu[k] - 2.0 ** -(k + 1)) <= 3 * law.nu_se[k] + 1e-3

    def test_laplace_transform_identity(self, rcar_spec):
        law = cluster_size_law(RCARForwardSampler(rcar_spec), 30, 50_000, RngStream(14), shards=SHARDS)
        assert law.laplace_transform(0.5) == pytest.approx(law.laplace_from_nu(0.5), abs=1e-6)

    def test_records(self, ma1_spec):
        law = cluster_size_law(MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(15), shards=SHARDS)
        methods = {r["method"] for r in law.to_records()}
        assert methods == {"nu-law", "kappa-law", "kappa-mean"}


class TestLaplaceFunctional:

    def test_zero_functional_is_one(self, ma1_spec):
        result = laplace_functional(zero_functional(), MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(16),
                                    shards=SHARDS)
        assert result.general.value == pytest.approx(1.0)
        assert result.simplified.value == pytest.approx(1.0)

    def test_ma1_indicator(self, ma1_spec):
        result = laplace_functional(indicator(1.0, 1.0), MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(17),
                                    shards=SHARDS)
        assert result.general.value == pytest.approx(math.exp(-2.0))
        assert result.simplified.value == pytest.approx(math.exp(-2.0))
        assert result.agrees

    def test_small_radius_skips_simplified(self, ma1_spec):
        f = parse_functional_manifest("capped 0.5 capped scale=1")[0]
        result = laplace_functional(f, MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(18), shards=SHARDS)
        assert result.simplified is None
        assert result.agrees is None

    def test_rcar_forms_agree(self, rcar_spec):
        f = indicator(0.7, 2.0, name="indicator-2")
        result = laplace_functional(f, RCARForwardSampler(rcar_spec), 20, 50_000, RngStream(19), shards=SHARDS)
        assert result.agrees

    def test_callable_needs_radius(self, ma1_spec):
        with pytest.raises(InvalidParameterError):
            laplace_functional(lambda r: r, MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(1))


class TestFunctionalManifest:

    def test_parse(self):
        text = "# comment\nind 1.0 indicator scale=2\n\nexc 2.0 excess level=3  # trailing\n"
        functionals = parse_functional_manifest(text)
        assert [f.name for f in functionals] == ["ind", "exc"]
        assert functionals[0].scale == 2.0
        assert functionals[1].level == 3.0

    def test_must_vanish_on_declared_ball(self):
        with pytest.raises(InvalidParameterError, match="line 1"):
            parse_functional_manifest("bad 2.0 indicator level=1")

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            parse_functional_manifest("bad 1.0 wiggle")

    def test_battery_lookup(self):
        assert battery_functional("anchor-forward").name == "anchor-forward"
        with pytest.raises(InvalidParameterError):
            battery_functional("missing")


class TestIdentities:

    @pytest.mark.parametrize("s,t", [(-1, 1), (0, 1), (-2, 2)])
    @pytest.mark.parametrize("i", [-2, -1, 0, 1, 2])
    def test_time_change_battery_ma1(self, ma1_spec, i, s, t):
        sampler = MMASpectralSampler(ma1_spec)
        for j, f in enumerate(TIME_CHANGE_BATTERY):
            check = time_change_check(sampler, i, s, t, f, N_MC, RngStream(20).child(j), shards=SHARDS)
            assert check.agrees, check.to_record()

    def test_anchor_forward_value(self, ma1_spec):
        f = battery_functional("anchor-forward")
        check = time_change_check(MMASpectralSampler(ma1_spec), 1, 0, 1, f, N_MC, RngStream(21), shards=SHARDS)
        assert check.lhs.value == pytest.approx(0.5)
        assert check.rhs.value == pytest.approx(0.5)

    def test_wide_window_shift_two(self):
        # MA(2), 係数 1, 1, 1: 3 本のブランチのうち Θ_{-2} != 0 と Θ_2 != 0 はそれぞれ 1 本
        sampler = MMASpectralSampler(MMASpec.univariate([1.0, 1.0, 1.0], alpha=1.0))
        f = battery_functional("anchor-forward")
        check = time_change_check(sampler, 2, -2, 2, f, N_MC, RngStream(24), shards=SHARDS)
        assert check.lhs.value == pytest.approx(1.0 / 3.0)
        assert check.rhs.value == pytest.approx(1.0 / 3.0)
        assert check.name == "time-change[anchor-forward,i=2,s=-2,t=2]"

    def test_lag_reversal_ma1(self, ma1_spec):
        check = lag_reversal_check(MMASpectralSampler(ma1_spec), 1, N_MC, RngStream(22), shards=SHARDS)
        assert check.lhs.value == pytest.approx(0.5)
        assert check.rhs.value == pytest.approx(0.5)

    def test_time_change_bivariate_random(self):
        innovation = RVLaw(RadialLaw(1.5), uniform_sphere(2))
        spec = MMASpec.deterministic(np.stack([np.eye(2), np.array([[0.5, 1.0], [0.0, 2.0]])]), innovation)
        sampler = MMASpectralSampler(spec)
        for i in (-1, 1, 2):
            check = time_change_check(sampler, i, -1, 1, TIME_CHANGE_BATTERY[2], 50_000,
                                      RngStream(23).child(i + 2), shards=SHARDS)
            assert check.agrees, check.to_record()

    def test_time_change_direction_dependent(self):
        # 座標の符号に依存する関数: ノルムだけでは決まらない
        innovation = RVLaw(RadialLaw(1.5), uniform_sphere(2))
        spec = MMASpec.deterministic(np.stack([np.eye(2), np.array([[0.5, 1.0], [0.0, 2.0]])]), innovation)
        sampler = MMASpectralSampler(spec)
        f = WindowFunctional(
            "tilt", lambda y, n, o: 0.5 * (1.0 + np.tanh(y[..., o, 0] + y[..., -1, 1] - y[..., 0, 0])))
        checks = [time_change_check(sampler, i, -2, 2, f, 50_000, RngStream(25).child(i + 2), shards=SHARDS)
                  for i in (-1, 1)]
        for check in checks:
            assert check.agrees, check.to_record()
        # 左辺は 0 から離れた値になる
        assert all(check.lhs.value > 0.05 for check in checks)

    def test_window_must_contain_zero(self, ma1_spec):
        with pytest.raises(InvalidParameterError, match="s <= 0 <= t"):
            time_change_check(MMASpectralSampler(ma1_spec), 1, 1, 2, TIME_CHANGE_BATTERY[0], N_MC, RngStream(1))

    def test_shift_must_be_integer(self, ma1_spec):
        with pytest.raises(InvalidParameterError, match="integer"):
            time_change_check(MMASpectralSampler(ma1_spec), 0.5, -1, 1, TIME_CHANGE_BATTERY[0], N_MC, RngStream(1))

    def test_forward_only_sampler_rejected(self, rcar_spec):
        with pytest.raises(InvalidParameterError):
            time_change_check(RCARForwardSampler(rcar_spec), 1, 0, 1, TIME_CHANGE_BATTERY[0], N_MC, RngStream(1))



class TestProjection:

    def test_univariate_abs_matches_theta(self, ma1_spec):
        theta = linear_projection_theta([1.0], MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(24), shards=SHARDS)
        assert theta.value == pytest.approx(0.5)
        assert theta.details["sided"] == "abs"

    def test_univariate_positive(self, ma1_spec):
        theta = univariate_positive_theta(MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(25), shards=SHARDS)
        assert theta.value == pytest.approx(0.5)

    def test_negative_direction_is_degenerate(self, ma1_spec):
        with pytest.raises(DegenerateProjectionError):
            linear_projection_theta([-1.0], MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(26),
                                    sided=Sided.POSITIVE, shards=SHARDS)

    def test_length_mismatch(self, ma1_spec):
        with pytest.raises(InvalidParameterError):
            linear_projection_theta([1.0, 1.0], MMASpectralSampler(ma1_spec), 3, N_MC, RngStream(1))

    def test_sided_from_string(self):
        assert Sided.from_string("POSITIVE") == Sided.POSITIVE
        with pytest.raises(InvalidParameterError):
            Sided.from_string("left")


class TestBreiman:

    def test_constant_matrix(self):
        value = breiman_constant(lambda gen, n: np.full(n, 2.0), positive_unit(), 1.0, 1000, RngStream(27))
        assert value.value == pytest.approx(2.0)
        assert value.std_error == pytest.approx(0.0, abs=1e-12)

    def test_uniform_scalar(self):
        # E U^alpha = 1/(alpha+1) for U uniform on (0, 1)
        value = breiman_constant(lambda gen, n: gen.random(n), positive_unit(), 2.0, 100_000, RngStream(28),
                                 shards=SHARDS)
        assert abs(value.value - 1.0 / 3.0) <= 4 * value.std_error

    def test_extremal_index_limit(self):
        assert extremal_index_limit(0.5, 1.0, 1.0) == pytest.approx(math.exp(-0.5))
        assert extremal_index_limit(1.0, 2.0, 1.0) == pytest.approx(math.exp(-0.5))
        with pytest.raises(InvalidParameterError):
            extremal_index_limit(1.5, 1.0, 1.0)


class TestThetaEstimate:

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            ThetaEstimate(1.2, 0.0, ThetaMethod.RUNS, 10)

    def test_closed_form_has_no_error(self):
        with pytest.raises(InvalidParameterError):
            ThetaEstimate(0.5, 0.1, ThetaMethod.CLOSED_FORM, 0)

    def test_record_fields(self):
        record = ThetaEstimate(0.5, 0.01, ThetaMethod.BLOCKS, 100, {"clamped": False}).to_record()
        assert record["method"] == "blocks"
        assert record["truncation"] == "none"
        assert record["clamped"] is False
