"""Exact log-likelihood for the scalar linear-Gaussian model.

The filter below is specialised to the AR(1)-plus-noise model from
:func:`gposmc.models.lgss_model` (state noise variance 1, observation noise
variance 0.01, known initial state 0). It serves as the ground-truth oracle
against which the particle estimates are validated, and as the basis of a
grid-search maximum-likelihood baseline.
"""

from __future__ import annotations

import math

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)

STATE_VAR = 1.0
OBS_VAR = 0.1 ** 2


def kalman_loglik(theta, y) -> float:
    """Exact log-likelihood of the scalar linear-Gaussian model.

    Parameters
    ----------
    theta : float or length-1 array
        AR coefficient, must satisfy ``|theta| <= 1``.
    y : array-like
        Observation series.

    Returns
    -------
    float
        Sum of the one-step predictive Gaussian log-densities.
    """
    th = float(np.atleast_1d(np.asarray(theta, dtype=float))[0])
    if abs(th) > 1.0:
        raise ValueError(f"theta must lie in [-1, 1], got {th}")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size < 1:
        raise ValueError("observation series must be non-empty")

    # initial state known exactly: mean 0, variance 0
    mean = 0.0
    var = 0.0
    loglik = 0.0
    for yt in y:
        mean = th * mean
        var = th * th * var + STATE_VAR
        innov_var = var + OBS_VAR
        resid = yt - mean
        loglik += -0.5 * (_LOG_2PI + math.log(innov_var) + resid * resid / innov_var)
        gain = var / innov_var
        mean += gain * resid
        var *= 1.0 - gain
    return loglik


def grid_mle(y, grid_points: int) -> float:
    """Maximum-likelihood AR coefficient on a regular grid over [-1, 1].

    Ties are broken toward the smaller grid point.
    """
    if grid_points < 3:
        raise ValueError("grid_points must be at least 3")
    grid = np.linspace(-1.0, 1.0, grid_points)
    values = np.array([kalman_loglik(t, y) for t in grid])
    return float(grid[int(np.argmax(values))])
