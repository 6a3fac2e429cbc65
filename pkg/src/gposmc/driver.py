"""End-to-end surrogate-optimisation loop for likelihood maximisation.

Each iteration spends exactly one particle-filter log-likelihood estimate,
refits the surrogate to the accumulated iterates, and picks the next
iterate by maximising expected improvement. The final estimate is the
maximiser of the last posterior mean over the whole box, found with a
fresh DIRECT run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import acquisition, direct, gp, particle
from .models import SsmSpec, validate_theta

#: fallback when no finite estimate exists yet to anchor the floor
_ABSOLUTE_FLOOR = -1e10


@dataclass(frozen=True)
class GpoConfig:
    """Settings of one optimisation run."""

    iterations: int
    n_particles: int
    theta1: np.ndarray
    zeta: float = 0.01
    seed: int = 0
    loglik_floor: float | None = None
    inner_max_evals: int = 500
    final_max_evals: int = 500
    resampling: str = "systematic"
    fit: gp.GpFitConfig = field(default_factory=gp.GpFitConfig)

    def __post_init__(self):
        object.__setattr__(
            self, "theta1", np.atleast_1d(np.asarray(self.theta1, dtype=float))
        )
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.n_particles < 1:
            raise ValueError("n_particles must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration diagnostics of the outer loop."""

    iteration: int
    theta: np.ndarray
    loglik_hat: float
    degenerate: bool
    mu_max: float
    ei_max: float
    hyper: gp.GpHyperparams


@dataclass(frozen=True)
class GpoResult:
    theta_hat: np.ndarray
    history: gp.IterateSet
    per_iteration: list
    final_posterior: gp.GpPosterior
    n_loglik_evals: int
    snapshots: dict


def run_gpo(model: SsmSpec, y, config: GpoConfig, snapshot_iters=()) -> GpoResult:
    """Run the full loop and return the estimate with its diagnostics.

    Degenerate particle-filter runs are replaced by a finite floor (the
    smallest finite estimate so far minus 100, or a fixed fallback) so a
    single collapsed estimate cannot destroy the surrogate. The particle
    seed at iteration k is ``config.seed + k``. ``snapshot_iters`` selects
    iterations whose fitted posterior is kept for surface dumps.
    """
    theta = validate_theta(model, config.theta1)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    snapshot_iters = set(int(k) for k in snapshot_iters)
    acq_config = acquisition.AcquisitionConfig(
        zeta=config.zeta, inner_max_evals=config.inner_max_evals
    )

    thetas = []
    lls = []
    records = []
    snapshots = {}
    prev_hyper = None
    post = None
    n_evals = 0
    for k in range(1, config.iterations + 1):
        est = particle.estimate_loglik(
            model,
            theta,
            y,
            config.n_particles,
            seed=config.seed + k,
            resampling=config.resampling,
        )
        n_evals += 1
        if est.degenerate:
            if config.loglik_floor is not None:
                ll = config.loglik_floor
            else:
                finite = [v for v in lls if np.isfinite(v)]
                ll = min(finite) - 100.0 if finite else _ABSOLUTE_FLOOR
        else:
            ll = est.value

        thetas.append(theta)
        lls.append(ll)
        data = gp.IterateSet(np.array(thetas), np.array(lls))
        post = gp.fit(data, model.domain, init=prev_hyper, config=config.fit)
        prev_hyper = post.hyper

        mu_best = acquisition.mu_max(post)
        theta_next = acquisition.next_iterate(post, model.domain, acq_config)
        ei_best = acquisition.expected_improvement(
            post, theta_next, mu_best, config.zeta
        )
        records.append(
            IterationRecord(
                iteration=k,
                theta=theta,
                loglik_hat=ll,
                degenerate=est.degenerate,
                mu_max=mu_best,
                ei_max=ei_best,
                hyper=post.hyper,
            )
        )
        if k in snapshot_iters:
            snapshots[k] = post
        theta = theta_next

    final = direct.maximize(
        lambda th: post.predict(th)[0],
        model.domain,
        direct.DirectConfig(max_evals=config.final_max_evals),
    )
    return GpoResult(
        theta_hat=np.asarray(final.theta, dtype=float),
        history=gp.IterateSet(np.array(thetas), np.array(lls)),
        per_iteration=records,
        final_posterior=post,
        n_loglik_evals=n_evals,
        snapshots=snapshots,
    )


def posterior_surface(post: gp.GpPosterior, grid_points: int, zeta: float):
    """Regular-grid evaluation of the surrogate for plotting or dumps.

    Returns ``(grid, mu, sigma_latent, ei)`` where ``grid`` has one row per
    grid node. Supported for 1- and 2-dimensional domains only.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    domain = post.domain
    if domain.dim > 2:
        raise ValueError("surface dumps support at most 2 parameter dimensions")
    axes = [
        np.linspace(domain.lower[i], domain.upper[i], grid_points)
        for i in range(domain.dim)
    ]
    if domain.dim == 1:
        grid = axes[0][:, None]
    else:
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        grid = np.column_stack([xx.ravel(), yy.ravel()])
    mu, var_latent, _ = post.predict(grid)
    sigma = np.sqrt(var_latent)
    mu_best = acquisition.mu_max(post)
    ei = acquisition.ei_from_moments(mu, sigma, mu_best, zeta)
    return grid, mu, sigma, ei


def emit_diagnostics(result: GpoResult, grid_points: int, zeta: float = 0.01):
    """Surface table of the final posterior (see :func:`posterior_surface`)."""
    return posterior_surface(result.final_posterior, grid_points, zeta)
