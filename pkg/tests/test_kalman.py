"""Exact filter oracle: closed forms and dense-Gaussian cross-checks."""

import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

import gposmc as g
from gposmc import kalman


def dense_gaussian_loglik(theta: float, y: np.ndarray) -> float:
    """Joint log-density of the observations via the explicit covariance.

    Independent oracle: builds the full T x T covariance of the observation
    vector from the AR(1) recursion started at the known zero state.
    """
    T = len(y)
    var_x = np.empty(T)
    var_x[0] = 1.0
    for t in range(1, T):
        var_x[t] = theta**2 * var_x[t - 1] + 1.0
    cov = np.empty((T, T))
    for s in range(T):
        for t in range(s, T):
            cov[s, t] = cov[t, s] = theta ** (t - s) * var_x[s]
    cov += 0.01 * np.eye(T)
    return float(multivariate_normal.logpdf(y, mean=np.zeros(T), cov=cov))


class TestKalmanLoglik:
    def test_decoupled_chain_closed_form(self, lgss):
        _, obs = g.simulate(lgss, [0.0], 100, seed=2)
        y = np.asarray(obs)
        want = np.sum(
            -0.5 * (math.log(2 * math.pi) + math.log(1.01) + y**2 / 1.01)
        )
        assert g.kalman_loglik(0.0, y) == pytest.approx(want, abs=1e-10)

    def test_matches_dense_gaussian_T3(self, lgss_data_short):
        got = g.kalman_loglik(0.5, lgss_data_short)
        want = dense_gaussian_loglik(0.5, lgss_data_short)
        assert got == pytest.approx(want, abs=1e-10)

    def test_matches_dense_gaussian_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            T = int(rng.integers(1, 6))
            theta = float(rng.uniform(-1, 1))
            y = rng.normal(0.0, 1.0, size=T)
            assert g.kalman_loglik(theta, y) == pytest.approx(
                dense_gaussian_loglik(theta, y), abs=1e-10
            )

    def test_order_sensitivity(self, lgss_data):
        y = lgss_data[:50]
        permuted = y[::-1].copy()
        assert g.kalman_loglik(0.5, y) != g.kalman_loglik(0.5, permuted)

    def test_out_of_range_theta_rejected(self):
        with pytest.raises(ValueError):
            g.kalman_loglik(1.5, np.ones(3))

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            g.kalman_loglik(0.5, np.array([]))

    def test_grid_surface_peaks_near_truth(self, lgss):
        # statistical: the continuous likelihood maximiser over a 101-point
        # grid should land near the generating parameter for most datasets
        hits = 0
        for seed in range(20):
            _, obs = g.simulate(lgss, [0.5], 250, seed=300 + seed)
            y = np.asarray(obs)
            grid = np.linspace(-1, 1, 101)
            values = [g.kalman_loglik(t, y) for t in grid]
            peak = grid[int(np.argmax(values))]
            hits += abs(peak - 0.5) <= 0.15
        assert hits >= 18


class TestGridMle:
    def test_recovers_generating_parameter(self, lgss):
        hits = 0
        for seed in range(20):
            _, obs = g.simulate(lgss, [0.5], 250, seed=600 + seed)
            hits += abs(g.grid_mle(np.asarray(obs), 201) - 0.5) <= 0.15
        assert hits >= 18

    def test_tie_break_toward_smaller_theta(self, monkeypatch):
        monkeypatch.setattr(kalman, "kalman_loglik", lambda theta, y: 1.0)
        assert kalman.grid_mle(np.array([0.3]), 11) == -1.0

    def test_three_point_grid_membership(self, lgss_data):
        assert g.grid_mle(lgss_data, 3) in (-1.0, 0.0, 1.0)

    def test_too_few_points_rejected(self, lgss_data):
        with pytest.raises(ValueError):
            g.grid_mle(lgss_data, 2)
