"""Expected-improvement acquisition over the fitted surrogate.

The acquisition targets improvement of the posterior mean over the current
expected peak (the best posterior mean among visited iterates) minus an
exploration margin. The improvement uses the latent posterior standard
deviation, without the evaluation-noise variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import log_ndtr, ndtr

from . import direct
from .models import BoxDomain
from .gp import GpPosterior

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

#: below this posterior standard deviation the improvement is deterministic
SIGMA_EPS = 1e-9

#: switch to the log-scale tail evaluation below this standardised gap
_TAIL_Z = -8.0

#: below this the improvement underflows double precision entirely
_ZERO_Z = -38.0


@dataclass(frozen=True)
class AcquisitionConfig:
    zeta: float = 0.01
    inner_max_evals: int = 500

    def __post_init__(self):
        if not (math.isfinite(self.zeta) and self.zeta >= 0.0):
            raise ValueError("zeta must be finite and non-negative")
        if self.inner_max_evals < 1:
            raise ValueError("inner_max_evals must be at least 1")


def mu_max(post: GpPosterior) -> float:
    """Best posterior mean over the visited iterates (the expected peak)."""
    mu, _, _ = post.predict(post.train.thetas)
    return float(np.max(mu))


def ei_from_moments(mu, sigma, mu_best: float, zeta: float):
    """Expected improvement from posterior moments (vectorised).

    Evaluates sigma * (z * Phi(z) + phi(z)) with z = (mu - mu_best - zeta) /
    sigma. Far in the left tail the two terms cancel, so the difference is
    formed in log scale via log1p. Degenerate sigma reduces to the plain
    positive-part improvement.
    """
    mu = np.asarray(mu, dtype=float)
    sigma_in = np.asarray(sigma, dtype=float)
    scalar = mu.ndim == 0 and sigma_in.ndim == 0
    gap = mu - mu_best - zeta
    gap, sigma = np.atleast_1d(*np.broadcast_arrays(gap, sigma_in))
    out = np.maximum(gap, 0.0).astype(float)

    ok = sigma >= SIGMA_EPS
    if np.any(ok):
        z = gap[ok] / sigma[ok]
        ei = np.empty_like(z)
        mid = z >= _TAIL_Z
        zm = z[mid]
        ei[mid] = zm * ndtr(zm) + np.exp(-0.5 * zm * zm - _LOG_SQRT_2PI)
        tail = ~mid
        if np.any(tail):
            zt = z[tail]
            log_pdf = -0.5 * zt * zt - _LOG_SQRT_2PI
            # phi(z) + z*Phi(z) = exp(a) - exp(b), a > b by the Mills bound
            log_neg = np.log(-zt) + log_ndtr(zt)
            ei[tail] = np.exp(log_pdf + np.log1p(-np.exp(log_neg - log_pdf)))
        out[ok] = sigma[ok] * ei
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


def expected_improvement(
    post: GpPosterior, theta, mu_best: float, zeta: float
) -> float:
    """Expected improvement of the latent objective at ``theta``."""
    mu, var_latent, _ = post.predict(theta)
    sigma = math.sqrt(max(var_latent, 0.0))
    return float(ei_from_moments(mu, sigma, mu_best, zeta))


def next_iterate(
    post: GpPosterior,
    domain: BoxDomain,
    config: AcquisitionConfig | None = None,
    optimizer: Callable = direct.maximize,
) -> np.ndarray:
    """Parameter maximising the expected improvement over the box."""
    config = config or AcquisitionConfig()
    mu_best = mu_max(post)

    def objective(theta):
        return expected_improvement(post, theta, mu_best, config.zeta)

    result = optimizer(
        objective, domain, direct.DirectConfig(max_evals=config.inner_max_evals)
    )
    return np.asarray(result.theta, dtype=float)
