"""Simultaneous-perturbation stochastic approximation baseline.

Ascent on a noisy objective where the full gradient is estimated from two
evaluations per iteration at simultaneously perturbed points. Iterates and
perturbed evaluation points are projected onto the box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import BoxDomain


@dataclass(frozen=True)
class SpsaConfig:
    """Gain and perturbation schedules for a fixed iteration budget.

    The decay exponents follow the standard practical recommendation
    (0.602 and 0.101) and the stability constant defaults to 10% of
    the iteration budget.
    """

    iterations: int
    a: float = 0.03
    c: float = 0.04
    alpha: float = 0.602
    gamma: float = 0.101
    A: float | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.a < 0.0 or self.c <= 0.0:
            raise ValueError("gains must satisfy a >= 0 and c > 0")
        if not 0.0 < self.gamma < self.alpha <= 1.0:
            raise ValueError("exponents must satisfy 0 < gamma < alpha <= 1")
        if self.A is not None and self.A < 0.0:
            raise ValueError("A must be non-negative")

    @property
    def stability_constant(self) -> float:
        return 0.1 * self.iterations if self.A is None else self.A


@dataclass(frozen=True)
class SpsaTrace:
    """Iterate history of one run; row 0 is the starting point."""

    iterates: np.ndarray  # (iterations + 1, d)
    n_evals: int
    eval_seeds: np.ndarray  # (iterations, 2)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]


def spsa_gradient(objective: Callable, theta, c_k: float, delta, seeds, domain=None):
    """Two-point simultaneous-perturbation gradient estimate.

    ``objective`` has signature ``(theta, seed) -> float``; the perturbed
    points are clipped into ``domain`` when one is given. Returns
    ``(gradient, f_plus, f_minus)``; the gradient is NaN-free only when
    both evaluations are finite.
    """
    theta = np.asarray(theta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    plus = theta + c_k * delta
    minus = theta - c_k * delta
    if domain is not None:
        plus = domain.clip(plus)
        minus = domain.clip(minus)
    f_plus = float(objective(plus, int(seeds[0])))
    f_minus = float(objective(minus, int(seeds[1])))
    grad = (f_plus - f_minus) / (2.0 * c_k) / delta
    return grad, f_plus, f_minus


def run_spsa(
    noisy_objective: Callable,
    theta0,
    domain: BoxDomain,
    config: SpsaConfig,
    seed: int,
) -> SpsaTrace:
    """Run the ascent for ``config.iterations`` iterations from ``theta0``.

    Each iteration spends exactly two objective evaluations with seeds
    ``(seed + 2k, seed + 2k + 1)``; iterations where either evaluation is
    non-finite leave the iterate unchanged. Perturbation signs come from an
    independent generator seeded with ``seed``.
    """
    theta = np.atleast_1d(np.asarray(theta0, dtype=float))
    if not domain.contains(theta):
        raise ValueError(f"theta0 {theta.tolist()} lies outside the domain")
    rng = np.random.default_rng(seed)
    d = theta.size
    K = config.iterations
    A = config.stability_constant

    iterates = np.empty((K + 1, d))
    iterates[0] = theta
    eval_seeds = np.empty((K, 2), dtype=np.int64)
    n_evals = 0
    for k in range(K):
        a_k = config.a / (A + k + 1.0) ** config.alpha
        c_k = config.c / (k + 1.0) ** config.gamma
        delta = rng.integers(0, 2, size=d) * 2 - 1
        eval_seeds[k] = (seed + 2 * k, seed + 2 * k + 1)
        grad, f_plus, f_minus = spsa_gradient(
            noisy_objective, theta, c_k, delta, eval_seeds[k], domain=domain
        )
        n_evals += 2
        if np.isfinite(f_plus) and np.isfinite(f_minus):
            theta = domain.clip(theta + a_k * grad)
        iterates[k + 1] = theta
    return SpsaTrace(iterates=iterates, n_evals=n_evals, eval_seeds=eval_seeds)
