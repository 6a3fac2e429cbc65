"""Figure rendering for the CLI report paths.

Every report-producing subcommand renders matplotlib figures to files next
to its delimited output. Rendering is deterministic: fixed backend, dpi and
metadata, and no timestamps.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy.stats import gaussian_kde, norm

_SAVE_KWARGS = {"dpi": 130, "metadata": {"Software": "gposmc"}}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def render_replicates(values, center, path) -> None:
    """Histogram/KDE of the estimation error and its normal QQ plot."""
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    err = values - center
    fig, (ax_hist, ax_qq) = plt.subplots(1, 2, figsize=(9, 3.6))

    ax_hist.hist(err, bins=40, density=True, color="0.75", edgecolor="0.4")
    if err.std() > 0 and err.size > 2:
        grid = np.linspace(err.min(), err.max(), 200)
        ax_hist.plot(grid, gaussian_kde(err)(grid), color="tab:blue", lw=1.5)
    ax_hist.set_xlabel("estimation error")
    ax_hist.set_ylabel("density")

    n = err.size
    probs = (np.arange(1, n + 1) - 0.5) / n
    theo = norm.ppf(probs, loc=err.mean(), scale=err.std(ddof=1) if n > 1 else 1.0)
    ax_qq.plot(theo, np.sort(err), "o", ms=2.5, color="0.3")
    lims = [min(theo[0], err.min()), max(theo[-1], err.max())]
    ax_qq.plot(lims, lims, color="tab:blue", lw=1.2)
    ax_qq.set_xlabel("theoretical quantiles")
    ax_qq.set_ylabel("sample quantiles")
    _save(fig, path)


def render_surface_1d(grid, mu, sigma, ei, train_thetas, train_values, path) -> None:
    """Posterior mean with 95% band over the box, acquisition underneath."""
    x = np.asarray(grid).ravel()
    fig, (ax_mu, ax_ei) = plt.subplots(
        2, 1, figsize=(6.2, 5.2), sharex=True, height_ratios=[2, 1]
    )
    ax_mu.fill_between(
        x, mu - 1.96 * sigma, mu + 1.96 * sigma, color="tab:blue", alpha=0.2, lw=0
    )
    ax_mu.plot(x, mu, color="tab:blue", lw=1.5, label="posterior mean")
    ax_mu.plot(
        np.asarray(train_thetas).ravel(),
        np.asarray(train_values),
        "o",
        ms=3.5,
        color="k",
        label="estimates",
    )
    ax_mu.set_ylabel("log-likelihood")
    ax_mu.legend(loc="lower center", fontsize=8)
    ax_ei.plot(x, ei, color="tab:green", lw=1.5)
    ax_ei.set_ylabel("expected improvement")
    ax_ei.set_xlabel("parameter")
    _save(fig, path)


def render_surface_2d(grid, mu, train_thetas, theta_hat, path) -> None:
    """Heat map of the posterior mean with iterates and the final estimate."""
    pts = np.asarray(grid)
    n = int(round(math.sqrt(pts.shape[0])))
    xx = pts[:, 0].reshape(n, n)
    yy = pts[:, 1].reshape(n, n)
    zz = np.asarray(mu).reshape(n, n)
    fig, ax = plt.subplots(figsize=(6.0, 4.6))
    im = ax.pcolormesh(xx, yy, zz, shading="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label="posterior mean")
    tt = np.asarray(train_thetas)
    ax.plot(tt[:, 0], tt[:, 1], "o", ms=2.5, color="w", alpha=0.8)
    if theta_hat is not None:
        ax.plot(theta_hat[0], theta_hat[1], "*", ms=12, color="tab:red")
    ax.set_xlabel("parameter 1")
    ax.set_ylabel("parameter 2")
    _save(fig, path)


def render_trace(iterates, evals_per_iter, theta_star, path) -> None:
    """Per-coordinate iterate trajectories against evaluation count."""
    tt = np.atleast_2d(np.asarray(iterates, dtype=float))
    d = tt.shape[1]
    evals = evals_per_iter * np.arange(tt.shape[0])
    fig, axes = plt.subplots(1, d, figsize=(4.6 * d, 3.4), squeeze=False)
    for i in range(d):
        ax = axes[0, i]
        ax.plot(evals, tt[:, i], color="tab:blue", lw=1.2)
        if theta_star is not None:
            ax.axhline(theta_star[i], color="k", ls=":", lw=1)
        ax.set_xlabel("log-likelihood evaluations")
        ax.set_ylabel(f"parameter {i + 1}")
    _save(fig, path)


def render_curve_1d(grid, columns, path) -> None:
    """Stacked line plots of named columns over a 1-d parameter grid."""
    x = np.asarray(grid).ravel()
    fig, axes = plt.subplots(
        len(columns), 1, figsize=(6.2, 2.4 * len(columns)), sharex=True, squeeze=False
    )
    for ax, (label, values) in zip(axes[:, 0], columns.items()):
        ax.plot(x, np.asarray(values), lw=1.4)
        ax.set_ylabel(label)
    axes[-1, 0].set_xlabel("parameter")
    _save(fig, path)
