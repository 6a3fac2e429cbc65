"""Bootstrap filter: resampling, estimates, replication, normality test."""

import math

import numpy as np
import pytest

import gposmc as g
from gposmc.models import BoxDomain, SsmSpec
from gposmc import particle

_LOG_2PI = math.log(2 * math.pi)


def _mock_model(obs_logdensity):
    """Random-walk state with an arbitrary observation log-density."""
    return SsmSpec(
        name="mock",
        param_dim=1,
        domain=BoxDomain([-1.0], [1.0]),
        initial_state=0.0,
        transition_sample=lambda th, x, rng: x + rng.standard_normal(np.shape(x)),
        observation_sample=lambda th, x, rng: np.zeros(np.shape(x)),
        observation_logdensity=obs_logdensity,
    )


def _flat_obs_model():
    # observation density independent of the state: N(y; 0, 1)
    return _mock_model(
        lambda th, x, y: np.full(np.shape(x), -0.5 * (_LOG_2PI + y * y))
    )


class TestResample:
    def test_equal_weights_systematic_identity(self):
        idx = g.resample(np.zeros(16), np.random.default_rng(0))
        np.testing.assert_array_equal(np.sort(idx), np.arange(16))

    def test_point_mass(self):
        lw = np.full(10, -np.inf)
        lw[3] = 0.0
        idx = g.resample(lw, np.random.default_rng(1))
        assert np.all(idx == 3)

    def test_multinomial_law_of_large_numbers(self):
        lw = np.log(np.array([2.0 / 3.0, 1.0 / 3.0]))
        idx = g.resample(
            lw, np.random.default_rng(2), scheme="multinomial", n_out=300_000
        )
        frac = np.bincount(idx, minlength=2) / idx.size
        np.testing.assert_allclose(frac, [2.0 / 3.0, 1.0 / 3.0], atol=0.005)

    def test_all_degenerate_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            g.resample(np.full(4, -np.inf), np.random.default_rng(0))

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            g.resample(np.zeros(4), np.random.default_rng(0), scheme="stratified")


class TestEstimateLoglik:
    def test_state_independent_density_is_exact(self, lgss_data_short):
        model = _flat_obs_model()
        want = float(
            np.sum(-0.5 * (_LOG_2PI + lgss_data_short**2))
        )
        values = [
            g.estimate_loglik(model, [0.0], lgss_data_short, 64, seed=s).value
            for s in range(5)
        ]
        assert values[0] == pytest.approx(want, abs=1e-10)
        assert len(set(values)) == 1  # zero variance across seeds

    def test_single_particle_is_finite(self, lgss, lgss_data):
        est = g.estimate_loglik(lgss, [0.5], lgss_data, 1, seed=0)
        assert np.isfinite(est.value)

    def test_reproducible(self, lgss, lgss_data):
        a = g.estimate_loglik(lgss, [0.5], lgss_data, 200, seed=42)
        b = g.estimate_loglik(lgss, [0.5], lgss_data, 200, seed=42)
        assert a.value == b.value
        np.testing.assert_array_equal(a.per_step_logsum, b.per_step_logsum)

    def test_value_matches_per_step_decomposition(self, lgss, lgss_data):
        est = g.estimate_loglik(lgss, [0.5], lgss_data, 100, seed=3)
        want = est.per_step_logsum.sum() - len(lgss_data) * math.log(100)
        assert est.value == pytest.approx(want, rel=1e-12)

    def test_close_to_kalman_oracle(self, lgss, lgss_data):
        llk = g.kalman_loglik(0.5, lgss_data)
        values = np.array(
            [
                g.estimate_loglik(lgss, [0.5], lgss_data, 1000, seed=s).value
                for s in range(100)
            ]
        )
        assert abs(values[0] - llk) <= 3 * values.std(ddof=1)

    def test_degenerate_flagged(self, lgss_data_short):
        model = _mock_model(lambda th, x, y: np.full(np.shape(x), -np.inf))
        est = g.estimate_loglik(model, [0.0], lgss_data_short, 32, seed=0)
        assert est.degenerate
        assert est.value == -np.inf

    def test_densities_near_underflow_stay_finite(self, lgss):
        # constant per-particle density around 1e-300
        model = _mock_model(lambda th, x, y: np.full(np.shape(x), -690.0))
        est = g.estimate_loglik(model, [0.0], np.zeros(50), 128, seed=0)
        assert np.isfinite(est.value)
        assert est.value == pytest.approx(50 * -690.0, rel=1e-12)

    def test_domain_violation_rejected(self, lgss, lgss_data):
        with pytest.raises(ValueError, match="outside"):
            g.estimate_loglik(lgss, [1.5], lgss_data, 10, seed=0)

    def test_variance_shrinks_with_more_particles(self, lgss, lgss_data):
        small = [
            g.estimate_loglik(lgss, [0.5], lgss_data, 250, seed=s).value
            for s in range(100)
        ]
        large = [
            g.estimate_loglik(lgss, [0.5], lgss_data, 4000, seed=s).value
            for s in range(100)
        ]
        assert np.var(large) < np.var(small)

    def test_likelihood_estimator_unbiased_small_horizon(self, lgss, lgss_data_short):
        # the plain (non-log) likelihood estimate averages to the truth
        llk = g.kalman_loglik(0.5, lgss_data_short)
        vals = g.replicate_loglik(lgss, [0.5], lgss_data_short, 50, 20_000, base_seed=0)
        ratios = np.exp(vals - llk)
        se = ratios.std(ddof=1) / math.sqrt(ratios.size)
        assert abs(ratios.mean() - 1.0) <= 3 * se


class TestReplicateLoglik:
    def test_minimal_replication(self, lgss, lgss_data_short):
        vals = g.replicate_loglik(lgss, [0.5], lgss_data_short, 20, 2, base_seed=5)
        assert vals.shape == (2,)

    def test_same_base_seed_identical(self, lgss, lgss_data_short):
        a = g.replicate_loglik(lgss, [0.5], lgss_data_short, 30, 5, base_seed=9)
        b = g.replicate_loglik(lgss, [0.5], lgss_data_short, 30, 5, base_seed=9)
        np.testing.assert_array_equal(a, b)

    def test_too_few_reps_rejected(self, lgss, lgss_data_short):
        with pytest.raises(ValueError):
            g.replicate_loglik(lgss, [0.5], lgss_data_short, 30, 1, base_seed=0)

    def test_degenerate_runs_propagate_as_sentinels(self, lgss_data_short):
        model = _mock_model(lambda th, x, y: np.full(np.shape(x), -np.inf))
        vals = g.replicate_loglik(model, [0.0], lgss_data_short, 16, 3, base_seed=0)
        assert np.all(np.isinf(vals))

    def test_mean_sits_below_exact_loglik(self, lgss, lgss_data):
        # the log of an unbiased estimator is biased downward (Jensen), so
        # the replicate mean falls below the exact value but within a few
        # per-sample standard deviations of it
        llk = g.kalman_loglik(0.5, lgss_data)
        vals = g.replicate_loglik(lgss, [0.5], lgss_data, 1000, 200, base_seed=1)
        assert vals.mean() < llk
        assert llk - vals.mean() <= 3 * vals.std(ddof=1)


class TestNormalityDiagnostic:
    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            g.normality_diagnostic(np.zeros(10))

    def test_gaussian_samples_rarely_rejected(self):
        rng = np.random.default_rng(0)
        non_rejections = 0
        for _ in range(100):
            _, p = g.normality_diagnostic(rng.standard_normal(10_000))
            non_rejections += p > 0.05
        assert non_rejections >= 90

    def test_exponential_samples_always_rejected(self):
        rng = np.random.default_rng(1)
        rejections = 0
        for _ in range(100):
            _, p = g.normality_diagnostic(rng.exponential(size=10_000))
            rejections += p < 0.05
        assert rejections >= 99

    def test_statistic_matches_direct_ks_computation(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(200)
        stat, _ = g.normality_diagnostic(x)
        from scipy.stats import norm

        z = np.sort((x - x.mean()) / x.std(ddof=1))
        cdf = norm.cdf(z)
        n = len(z)
        want = max(
            np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n)
        )
        assert stat == pytest.approx(want, abs=1e-12)


@pytest.mark.slow
class TestReplicateNormality:
    def test_pf_replicates_pass_normality_for_most_datasets(self, lgss):
        """Gaussianity of the estimator error at N=1000 (statistical check)."""
        rejections = 0
        for ds in range(10):
            _, obs = g.simulate(lgss, [0.5], 250, seed=2000 + ds)
            vals = g.replicate_loglik(
                lgss, [0.5], np.asarray(obs), 1000, 1000, base_seed=ds * 100_000
            )
            _, p = g.normality_diagnostic(vals[np.isfinite(vals)])
            rejections += p <= 0.05
        assert rejections <= 2
