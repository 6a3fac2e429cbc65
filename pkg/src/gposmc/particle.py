"""Bootstrap particle filter and log-likelihood estimation.

The filter proposes new particles from the state transition, so the
importance weights reduce to the observation density. The log-likelihood
estimate is the sum over time of the log of the mean unnormalised weight,
accumulated entirely in log scale. Weighting happens first at t=1 and
resampling from t=2 onward.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .models import SsmSpec, validate_theta

RESAMPLING_SCHEMES = ("systematic", "multinomial")


@dataclass(frozen=True)
class LogLikEstimate:
    """A noisy log-likelihood value with its provenance.

    When ``degenerate`` is False, ``value`` equals
    ``per_step_logsum.sum() - T * log(n_particles)``. A degenerate run (all
    importance weights underflowed at some step) carries ``value = -inf``
    and leaves the unreached entries of ``per_step_logsum`` at ``-inf``.
    """

    value: float
    n_particles: int
    seed: int
    per_step_logsum: np.ndarray
    degenerate: bool = False


def _ancestors_from_weights(weights, rng, scheme: str, n: int):
    # weights are non-negative with a positive sum, not necessarily normalised
    cum = np.cumsum(weights)
    cum /= cum[-1]
    cum[-1] = 1.0  # guard against rounding below the largest draw
    if scheme == "systematic":
        u = (rng.random() + np.arange(n)) / n
    else:
        u = rng.random(n)
    return np.searchsorted(cum, u, side="left")


def resample(log_weights, rng, scheme: str = "systematic", n_out: int | None = None):
    """Draw ancestor indices proportional to the given log-weights.

    Parameters
    ----------
    log_weights : array-like
        Unnormalised log-weights; at least one must exceed ``-inf``.
    rng : numpy.random.Generator
    scheme : {"systematic", "multinomial"}
    n_out : int, optional
        Number of indices to draw (defaults to ``len(log_weights)``).

    Returns
    -------
    ndarray of int
        Ancestor indices; under systematic resampling the offspring count
        of each particle matches its expected count up to rounding.
    """
    lw = np.atleast_1d(np.asarray(log_weights, dtype=float))
    if scheme not in RESAMPLING_SCHEMES:
        raise ValueError(f"unknown resampling scheme '{scheme}'")
    m = np.max(lw)
    if not np.isfinite(m):
        raise ValueError("cannot resample a degenerate particle system (all weights zero)")
    n = lw.size if n_out is None else int(n_out)
    return _ancestors_from_weights(np.exp(lw - m), rng, scheme, n)


def estimate_loglik(
    model: SsmSpec,
    theta,
    y,
    n_particles: int,
    seed: int,
    resampling: str = "systematic",
) -> LogLikEstimate:
    """Estimate the log-likelihood of ``y`` under ``model`` at ``theta``.

    Runs the bootstrap filter with ``n_particles`` particles: resample,
    propagate through the state transition, weight by the observation
    density. Reproducible from ``seed``.
    """
    theta = validate_theta(model, theta)
    if n_particles < 1:
        raise ValueError("n_particles must be at least 1")
    if resampling not in RESAMPLING_SCHEMES:
        raise ValueError(f"unknown resampling scheme '{resampling}'")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    T = y.size
    rng = np.random.default_rng(seed)

    particles = np.full(n_particles, float(model.initial_state))
    per_step = np.full(T, -np.inf)
    weights = None  # exp(log_w - max), reused for the next resampling step
    for t in range(T):
        if t > 0:
            idx = _ancestors_from_weights(weights, rng, resampling, n_particles)
            particles = particles[idx]
        particles = model.transition_sample(theta, particles, rng)
        log_w = model.observation_logdensity(theta, particles, y[t])
        m = np.max(log_w)
        if not np.isfinite(m):
            return LogLikEstimate(
                value=-np.inf,
                n_particles=n_particles,
                seed=seed,
                per_step_logsum=per_step,
                degenerate=True,
            )
        weights = np.exp(log_w - m)
        per_step[t] = m + math.log(np.sum(weights))

    value = float(per_step.sum() - T * math.log(n_particles))
    return LogLikEstimate(
        value=value,
        n_particles=n_particles,
        seed=seed,
        per_step_logsum=per_step,
        degenerate=False,
    )


def replicate_loglik(
    model: SsmSpec,
    theta,
    y,
    n_particles: int,
    n_reps: int,
    base_seed: int,
    resampling: str = "systematic",
) -> np.ndarray:
    """Independent log-likelihood estimates with seeds ``base_seed + i``.

    Degenerate runs appear as ``-inf`` sentinels in the returned vector.
    """
    if n_reps < 2:
        raise ValueError("n_reps must be at least 2")
    out = np.empty(n_reps)
    for i in range(n_reps):
        out[i] = estimate_loglik(
            model, theta, y, n_particles, seed=base_seed + i, resampling=resampling
        ).value
    return out


def _ks_statistic_sorted(z_sorted: np.ndarray) -> float:
    # Kolmogorov-Smirnov distance between the empirical CDF of the sorted,
    # standardised sample and the standard normal CDF.
    n = z_sorted.shape[-1]
    cdf = ndtr(z_sorted)
    steps_hi = np.arange(1, n + 1) / n
    steps_lo = np.arange(0, n) / n
    return float(np.max(np.maximum(steps_hi - cdf, cdf - steps_lo)))


def _lilliefors_statistic(samples: np.ndarray) -> float:
    m = samples.mean()
    s = samples.std(ddof=1)
    if not np.isfinite(s) or s <= 0.0:
        return 1.0
    return _ks_statistic_sorted(np.sort((samples - m) / s))


@functools.lru_cache(maxsize=8)
def _lilliefors_null_table(n: int, n_null: int, seed: int) -> np.ndarray:
    # Null distribution of the statistic for samples of size n with both
    # moments estimated; depends only on n, so it is cached per size.
    rng = np.random.default_rng(seed)
    stats = np.empty(n_null)
    chunk = max(1, 10_000_000 // max(n, 1))
    done = 0
    steps_hi = np.arange(1, n + 1) / n
    steps_lo = np.arange(0, n) / n
    while done < n_null:
        rows = min(chunk, n_null - done)
        z = rng.standard_normal((rows, n))
        z -= z.mean(axis=1, keepdims=True)
        z /= z.std(axis=1, ddof=1, keepdims=True)
        z.sort(axis=1)
        cdf = ndtr(z)
        d = np.maximum(steps_hi - cdf, cdf - steps_lo).max(axis=1)
        stats[done : done + rows] = d
        done += rows
    stats.sort()
    return stats


def normality_diagnostic(samples, n_null: int = 10_000, seed: int = 0):
    """Test the sample against a Gaussian with estimated mean and variance.

    Computes the Kolmogorov-Smirnov statistic with moments estimated from
    the data and a Monte-Carlo p-value from ``n_null`` simulated null
    samples of the same size (the parameter-estimation correction).

    Returns
    -------
    (statistic, p_value) : tuple of float
    """
    samples = np.atleast_1d(np.asarray(samples, dtype=float))
    samples = samples[np.isfinite(samples)]
    n = samples.size
    if n < 20:
        raise ValueError(f"need at least 20 finite samples, got {n}")
    if n_null < 100:
        raise ValueError("n_null must be at least 100")
    stat = _lilliefors_statistic(samples)
    table = _lilliefors_null_table(n, int(n_null), int(seed))
    n_ge = table.size - np.searchsorted(table, stat, side="left")
    p_value = (n_ge + 1) / (table.size + 1)
    return stat, float(p_value)
