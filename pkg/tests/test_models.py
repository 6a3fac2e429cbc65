"""Model definitions, domains, and forward simulation."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

import gposmc as g
from gposmc.models import BoxDomain, ObservationSeries


class TestBoxDomain:
    def test_contains_and_clip(self):
        dom = BoxDomain([-1.0, 0.0], [1.0, 2.0])
        assert dom.contains([0.0, 1.0])
        assert dom.contains([-1.0, 0.0])  # boundary included
        assert not dom.contains([1.5, 1.0])
        assert not dom.contains([0.0])
        np.testing.assert_allclose(dom.clip([5.0, -3.0]), [1.0, 0.0])

    def test_unit_mapping_roundtrip(self):
        dom = BoxDomain([-2.0, 1.0], [4.0, 3.0])
        theta = np.array([1.0, 2.5])
        np.testing.assert_allclose(dom.from_unit(dom.to_unit(theta)), theta)

    def test_invalid_bounds_rejected(self):
        with pytest.raises(ValueError):
            BoxDomain([0.0], [0.0])
        with pytest.raises(ValueError):
            BoxDomain([0.0], [np.inf])


class TestObservationSeries:
    def test_validation(self):
        with pytest.raises(ValueError):
            ObservationSeries(np.array([]))
        with pytest.raises(ValueError):
            ObservationSeries(np.array([1.0, np.nan]))

    def test_array_protocol(self):
        series = ObservationSeries(np.array([1.0, 2.0]))
        assert len(series) == 2
        np.testing.assert_array_equal(np.asarray(series), [1.0, 2.0])


class TestRegistry:
    def test_known_models(self):
        assert g.get_model("lgss").name == "lgss"
        assert g.get_model("hullwhite").name == "hullwhite"

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="unknown model"):
            g.get_model("nope")


class TestLgss:
    def test_domain(self, lgss):
        np.testing.assert_array_equal(lgss.domain.lower, [-1.0])
        np.testing.assert_array_equal(lgss.domain.upper, [1.0])

    def test_observation_density_at_mean(self, lgss):
        want = math.log(1.0 / (0.1 * math.sqrt(2 * math.pi)))
        got = lgss.observation_logdensity(np.array([0.5]), 1.0, 1.0)
        assert got == pytest.approx(want, abs=1e-12)

    def test_transition_reproducible(self, lgss):
        theta = np.array([0.3])
        x = np.zeros(100)
        a = lgss.transition_sample(theta, x, np.random.default_rng(5))
        b = lgss.transition_sample(theta, x, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_decoupled_chain_observation_variance(self, lgss):
        # AR coefficient 0 makes states i.i.d. standard normal, so the
        # observations are marginally N(0, 1 + 0.01)
        _, obs = g.simulate(lgss, [0.0], 100_000, seed=5)
        assert np.var(np.asarray(obs)) == pytest.approx(1.01, rel=0.05)

    def test_stationary_state_variance(self, lgss):
        # analytic AR(1) stationary variance 1/(1 - 0.25); the tolerance is
        # three standard errors of the sample variance of a T=250 AR(1) path
        theta = 0.5
        states, _ = g.simulate(lgss, [theta], 250, seed=3)
        var_true = 1.0 / (1.0 - theta**2)
        rho_sum = (1.0 + theta**2) / (1.0 - theta**2)
        se = math.sqrt(2.0 * var_true**2 * rho_sum / 250)
        assert abs(np.var(states) - var_true) <= 3 * se

    def test_lag1_autocorrelation(self, lgss):
        theta = 0.6
        states, _ = g.simulate(lgss, [theta], 100_000, seed=9)
        x = states - states.mean()
        acf1 = np.dot(x[:-1], x[1:]) / np.dot(x, x)
        assert abs(acf1 - theta) < 0.02


class TestHullwhite:
    def test_domain(self, hullwhite):
        np.testing.assert_array_equal(hullwhite.domain.lower, [-1.0, 0.0])
        np.testing.assert_array_equal(hullwhite.domain.upper, [1.0, 2.0])

    def test_observation_density_at_mean(self, hullwhite):
        want = math.log(1.0 / (0.7 * math.sqrt(2 * math.pi)))
        got = hullwhite.observation_logdensity(np.array([0.9, 0.2]), 0.0, 0.0)
        assert got == pytest.approx(want, abs=1e-12)

    def test_larger_state_lowers_peak_density(self, hullwhite):
        theta = np.array([0.9, 0.2])
        assert hullwhite.observation_logdensity(
            theta, 2.0, 0.0
        ) < hullwhite.observation_logdensity(theta, 0.0, 0.0)

    def test_stationary_state_variance(self, hullwhite):
        # AR(1) moment: var = 0.2^2 / (1 - 0.9^2)
        states, _ = g.simulate(hullwhite, [0.9, 0.2], 100_000, seed=5)
        assert np.var(states) == pytest.approx(0.04 / 0.19, rel=0.05)

    def test_zero_noise_boundary_is_deterministic(self, hullwhite):
        theta = np.array([0.7, 0.0])
        x_prev = np.array([1.0, -2.0, 0.25])
        out = hullwhite.transition_sample(theta, x_prev, np.random.default_rng(0))
        np.testing.assert_array_equal(out, 0.7 * x_prev)

    def test_extreme_state_gives_neg_inf_not_nan(self, hullwhite):
        theta = np.array([0.9, 0.2])
        val = hullwhite.observation_logdensity(theta, -2000.0, 1.0)
        assert val == -np.inf


class TestSimulate:
    def test_bitwise_reproducible(self, lgss, hullwhite):
        for model, theta in ((lgss, [0.5]), (hullwhite, [0.9, 0.2])):
            s1, o1 = g.simulate(model, theta, 50, seed=123)
            s2, o2 = g.simulate(model, theta, 50, seed=123)
            np.testing.assert_array_equal(s1, s2)
            np.testing.assert_array_equal(np.asarray(o1), np.asarray(o2))

    def test_theta_outside_domain_rejected(self, lgss):
        with pytest.raises(ValueError, match="outside"):
            g.simulate(lgss, [1.5], 10, seed=0)

    def test_bad_horizon_rejected(self, lgss):
        with pytest.raises(ValueError):
            g.simulate(lgss, [0.5], 0, seed=0)


class TestDensityNormalisation:
    @pytest.mark.parametrize("model_name", ["lgss", "hullwhite"])
    def test_observation_density_integrates_to_one(self, model_name):
        model = g.get_model(model_name)
        rng = np.random.default_rng(17)
        for _ in range(5):
            theta = rng.uniform(model.domain.lower, model.domain.upper)
            x = float(rng.normal(0.0, 1.0))
            if model_name == "lgss":
                center, spread = x, 0.1
            else:
                center, spread = 0.0, 0.7 * math.exp(0.5 * x)
            total, _ = quad(
                lambda yv: math.exp(model.observation_logdensity(theta, x, yv)),
                center - 12 * spread,
                center + 12 * spread,
            )
            assert total == pytest.approx(1.0, abs=1e-6)
