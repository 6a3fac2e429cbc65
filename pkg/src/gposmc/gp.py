"""Gaussian-process surrogate of the log-likelihood surface.

A GP with constant mean and anisotropic Matern-3/2 kernel is fitted to the
noisy log-likelihood evaluations. The observation-noise variance is a free
hyperparameter estimated together with the kernel hyperparameters by
maximising the marginal likelihood (empirical Bayes). Inputs are mapped to
the unit hypercube and outputs centred and scaled internally; all reported
hyperparameters and predictions are in the original units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .models import BoxDomain

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT3 = math.sqrt(3.0)

#: jitter escalation ladder applied to an ill-conditioned gram matrix,
#: relative to its mean diagonal
_JITTER_LEVELS = tuple(1e-10 * 10.0 ** i for i in range(7))


@dataclass(frozen=True)
class IterateSet:
    """Design set of parameter iterates and their log-likelihood estimates."""

    thetas: np.ndarray  # (k, d)
    loglik: np.ndarray  # (k,)

    def __post_init__(self):
        thetas = np.atleast_2d(np.asarray(self.thetas, dtype=float))
        loglik = np.atleast_1d(np.asarray(self.loglik, dtype=float))
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "loglik", loglik)
        if thetas.shape[0] != loglik.shape[0]:
            raise ValueError("thetas and loglik must have matching lengths")
        if thetas.shape[0] < 1:
            raise ValueError("an iterate set needs at least one point")

    @property
    def k(self) -> int:
        return self.thetas.shape[0]

    @property
    def dim(self) -> int:
        return self.thetas.shape[1]

    def extended(self, theta, value: float) -> "IterateSet":
        """A new set with one more (theta, value) pair appended."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return IterateSet(
            np.vstack([self.thetas, theta[None, :]]),
            np.append(self.loglik, float(value)),
        )


@dataclass(frozen=True)
class GpHyperparams:
    """Constant mean, kernel amplitude and scales, and noise variance."""

    mean_const: float
    signal_var: float
    length_scales: np.ndarray  # (d,)
    noise_var: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", ls)
        if self.signal_var <= 0.0:
            raise ValueError("signal_var must be positive")
        if np.any(ls <= 0.0):
            raise ValueError("length_scales must be positive")
        if self.noise_var < 0.0:
            raise ValueError("noise_var must be non-negative")


@dataclass(frozen=True)
class GpFitConfig:
    """Knobs for empirical-Bayes hyperparameter estimation."""

    k_min: int = 5
    n_starts: int = 5
    noise_floor: float = 1e-6
    max_evals_per_start: int = 200
    seed: int = 0


def _matern32_cross(A: np.ndarray, B: np.ndarray, signal_var: float, length_scales):
    """Matern-3/2 kernel matrix between the rows of A (m,d) and B (n,d)."""
    diff = (A[:, None, :] - B[None, :, :]) / length_scales
    r = np.sqrt(np.einsum("mnd,mnd->mn", diff, diff))
    s = _SQRT3 * r
    return signal_var * (1.0 + s) * np.exp(-s)


def matern32(theta_a, theta_b, hyper: GpHyperparams) -> float:
    """Matern-3/2 covariance between two parameter vectors."""
    a = np.atleast_1d(np.asarray(theta_a, dtype=float))
    b = np.atleast_1d(np.asarray(theta_b, dtype=float))
    if a.shape != b.shape:
        raise ValueError("theta_a and theta_b must have the same dimension")
    r = math.sqrt(float(np.sum(((a - b) / hyper.length_scales) ** 2)))
    s = _SQRT3 * r
    return hyper.signal_var * (1.0 + s) * math.exp(-s)


def _chol_jittered(gram: np.ndarray):
    """Lower Cholesky factor of ``gram``, escalating diagonal jitter on failure.

    Returns ``(L, jitter)`` where ``jitter`` is the absolute amount added to
    the diagonal (0 when none was needed). Raises LinAlgError once the
    escalation ladder is exhausted.
    """
    try:
        return cholesky(gram, lower=True), 0.0
    except LinAlgError:
        pass
    scale = float(np.mean(np.diag(gram)))
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    eye = np.eye(gram.shape[0])
    for level in _JITTER_LEVELS:
        jitter = level * scale
        try:
            return cholesky(gram + jitter * eye, lower=True), jitter
        except LinAlgError:
            continue
    raise LinAlgError(
        "gram matrix is not positive definite even after maximal jitter"
    )


def log_marginal_likelihood(data: IterateSet, hyper: GpHyperparams) -> float:
    """Log-density of the observed estimates under the GP prior plus noise."""
    K = _matern32_cross(data.thetas, data.thetas, hyper.signal_var, hyper.length_scales)
    gram = K + hyper.noise_var * np.eye(data.k)
    L, _ = _chol_jittered(gram)
    resid = data.loglik - hyper.mean_const
    alpha = cho_solve((L, True), resid)
    return float(
        -0.5 * resid @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * data.k * _LOG_2PI
    )


def default_hyperparams(
    data: IterateSet, domain: BoxDomain, noise_floor: float = 1e-6
) -> GpHyperparams:
    """Data-driven defaults used before empirical Bayes is well-posed."""
    mean_const = float(np.mean(data.loglik))
    signal_var = max(float(np.var(data.loglik)), 1.0)
    return GpHyperparams(
        mean_const=mean_const,
        signal_var=signal_var,
        length_scales=0.2 * domain.width,
        noise_var=max(0.01 * signal_var, noise_floor),
    )


@dataclass(frozen=True)
class GpPosterior:
    """Fitted surrogate, evaluable as (mean, variance) at any parameter."""

    hyper: GpHyperparams
    train: IterateSet
    domain: BoxDomain
    chol_factor: np.ndarray
    alpha: np.ndarray
    jitter: float
    u_train: np.ndarray = field(repr=False)
    _scaled_signal_var: float = field(repr=False, default=1.0)
    _scaled_noise_var: float = field(repr=False, default=0.0)
    _scaled_mean: float = field(repr=False, default=0.0)
    _unit_scales: np.ndarray = field(repr=False, default=None)
    _y_center: float = field(repr=False, default=0.0)
    _y_scale: float = field(repr=False, default=1.0)

    @classmethod
    def build(
        cls,
        data: IterateSet,
        domain: BoxDomain,
        hyper: GpHyperparams,
        y_center: float = 0.0,
        y_scale: float = 1.0,
    ) -> "GpPosterior":
        """Factorise the gram matrix for the given hyperparameters."""
        if data.dim != domain.dim:
            raise ValueError("iterate dimension does not match the domain")
        u_train = domain.to_unit(data.thetas)
        unit_scales = hyper.length_scales / domain.width
        sv = hyper.signal_var / y_scale**2
        nv = hyper.noise_var / y_scale**2
        c = (hyper.mean_const - y_center) / y_scale
        K = _matern32_cross(u_train, u_train, sv, unit_scales)
        L, jitter = _chol_jittered(K + nv * np.eye(data.k))
        ys = (data.loglik - y_center) / y_scale
        alpha = cho_solve((L, True), ys - c)
        return cls(
            hyper=hyper,
            train=data,
            domain=domain,
            chol_factor=L,
            alpha=alpha,
            jitter=jitter * y_scale**2,
            u_train=u_train,
            _scaled_signal_var=sv,
            _scaled_noise_var=nv,
            _scaled_mean=c,
            _unit_scales=unit_scales,
            _y_center=y_center,
            _y_scale=y_scale,
        )

    def predict(self, theta):
        """Posterior mean and variance of the log-likelihood at ``theta``.

        Accepts a single parameter vector (1-d) or a batch (m, d). Returns
        ``(mu, var_latent, var_observed)`` where ``var_observed`` adds the
        estimated evaluation-noise variance to the latent variance.
        """
        arr = np.atleast_1d(np.asarray(theta, dtype=float))
        single = arr.ndim == 1
        pts = arr[None, :] if single else arr
        if pts.shape[1] != self.domain.dim:
            raise ValueError(
                f"expected parameter dimension {self.domain.dim}, got {pts.shape[1]}"
            )
        u = self.domain.to_unit(pts)
        kv = _matern32_cross(u, self.u_train, self._scaled_signal_var, self._unit_scales)
        mu_s = self._scaled_mean + kv @ self.alpha
        v = solve_triangular(self.chol_factor, kv.T, lower=True)
        var_s = np.maximum(self._scaled_signal_var - np.einsum("ij,ij->j", v, v), 0.0)
        mu = self._y_center + self._y_scale * mu_s
        var_latent = self._y_scale**2 * var_s
        var_observed = var_latent + self.hyper.noise_var
        if single:
            return float(mu[0]), float(var_latent[0]), float(var_observed[0])
        return mu, var_latent, var_observed


def _scaled_neg_lml(params, dsq, ys, k, noise_floor_s):
    # params: [mean, log signal_var, log length_scales..., log excess noise]
    p = np.clip(params, -40.0, 40.0)
    c = p[0]
    sv = math.exp(p[1])
    inv_l2 = np.exp(-2.0 * p[2:-1])
    nv = noise_floor_s + math.exp(p[-1])
    r = np.sqrt(dsq @ inv_l2)
    s = _SQRT3 * r
    gram = sv * (1.0 + s) * np.exp(-s)
    gram[np.diag_indices_from(gram)] += nv
    try:
        L, _ = _chol_jittered(gram)
    except LinAlgError:
        return np.inf
    resid = ys - c
    alpha = cho_solve((L, True), resid)
    lml = -0.5 * resid @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * k * _LOG_2PI
    return -lml if np.isfinite(lml) else np.inf


def fit(
    data: IterateSet,
    domain: BoxDomain,
    init: GpHyperparams | None = None,
    config: GpFitConfig | None = None,
) -> GpPosterior:
    """Fit the surrogate to the iterate set by empirical Bayes.

    Hyperparameters maximise the marginal likelihood via multi-start
    Nelder-Mead in log-parameter space; the returned hyperparameters never
    score below the initialisation. With fewer than ``config.k_min`` points
    the hyperparameters are held at the data-driven defaults and only the
    factorisation is computed. ``init`` seeds the optimisation.
    """
    config = config or GpFitConfig()
    if data.dim != domain.dim:
        raise ValueError("iterate dimension does not match the domain")

    y = data.loglik
    y_center = float(np.mean(y))
    y_scale = float(np.std(y))
    if not np.isfinite(y_scale) or y_scale <= 0.0:
        y_scale = 1.0

    if data.k < config.k_min:
        hyper = default_hyperparams(data, domain, config.noise_floor)
        return GpPosterior.build(data, domain, hyper, y_center, y_scale)

    u_train = domain.to_unit(data.thetas)
    dsq = (u_train[:, None, :] - u_train[None, :, :]) ** 2  # (k, k, d)
    ys = (y - y_center) / y_scale
    floor_s = config.noise_floor / y_scale**2

    def to_params(h: GpHyperparams) -> np.ndarray:
        c = (h.mean_const - y_center) / y_scale
        sv = max(h.signal_var / y_scale**2, 1e-300)
        ls = np.maximum(h.length_scales / domain.width, 1e-300)
        excess = max(h.noise_var / y_scale**2 - floor_s, 1e-3 * floor_s + 1e-300)
        return np.concatenate([[c, math.log(sv)], np.log(ls), [math.log(excess)]])

    start = to_params(init if init is not None else default_hyperparams(data, domain, config.noise_floor))
    rng = np.random.default_rng(config.seed)
    starts = [start]
    for _ in range(config.n_starts - 1):
        starts.append(start + rng.normal(0.0, 1.0, size=start.size))

    args = (dsq, ys, data.k, floor_s)
    candidates = [(_scaled_neg_lml(start, *args), start)]
    for p0 in starts:
        res = minimize(
            _scaled_neg_lml,
            p0,
            args=args,
            method="Nelder-Mead",
            options={
                "maxfev": config.max_evals_per_start,
                "xatol": 1e-3,
                "fatol": 1e-7,
            },
        )
        if np.isfinite(res.fun):
            candidates.append((float(res.fun), res.x))
    best = min(candidates, key=lambda c: c[0])[1]

    p = np.clip(best, -40.0, 40.0)
    hyper = GpHyperparams(
        mean_const=y_center + y_scale * p[0],
        signal_var=math.exp(p[1]) * y_scale**2,
        length_scales=np.exp(p[2:-1]) * domain.width,
        noise_var=max((floor_s + math.exp(p[-1])) * y_scale**2, config.noise_floor),
    )
    return GpPosterior.build(data, domain, hyper, y_center, y_scale)
