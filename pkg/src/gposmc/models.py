"""State-space model definitions and forward simulation.

A model couples a Markov state transition with a conditionally independent
observation density, parametrised by a vector constrained to an axis-aligned
box. Two concrete models are provided: a scalar linear-Gaussian AR(1) model
observed through small additive noise, and a stochastic volatility model
where the latent state drives the observation variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of feasible parameter vectors."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("domain bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("each lower bound must lie strictly below its upper bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, theta) -> bool:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return bool(
            theta.shape == self.lower.shape
            and np.isfinite(theta).all()
            and np.all(theta >= self.lower)
            and np.all(theta <= self.upper)
        )

    def clip(self, theta) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self.lower, self.upper)

    def to_unit(self, theta) -> np.ndarray:
        """Map points from the box to the unit hypercube."""
        return (np.asarray(theta, dtype=float) - self.lower) / self.width

    def from_unit(self, u) -> np.ndarray:
        """Map points from the unit hypercube back to the box."""
        return self.lower + np.asarray(u, dtype=float) * self.width


@dataclass(frozen=True)
class ObservationSeries:
    """A validated series of scalar observations."""

    y: np.ndarray

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        object.__setattr__(self, "y", y)
        if y.ndim != 1 or y.size < 1:
            raise ValueError("observations must form a non-empty 1-d series")
        if not np.isfinite(y).all():
            raise ValueError("observations must all be finite")

    def __len__(self) -> int:
        return self.y.size

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.y.astype(dtype)
        return self.y


@dataclass(frozen=True)
class SsmSpec:
    """A parametric state-space model with known initial state.

    ``transition_sample`` and ``observation_sample`` must be vectorised over
    the state argument (they receive arrays of particles and must return
    arrays of the same shape), and must consume randomness only through the
    supplied generator so runs are reproducible from a seed.
    ``observation_logdensity`` must return finite values or ``-inf``,
    never NaN.
    """

    name: str
    param_dim: int
    domain: BoxDomain
    initial_state: float
    transition_sample: Callable  # (theta, x_prev, rng) -> x
    observation_sample: Callable  # (theta, x, rng) -> y
    observation_logdensity: Callable  # (theta, x, y) -> log g(y | x)
    transition_logdensity: Optional[Callable] = None  # (theta, x, x_prev) -> log f


def validate_theta(model: SsmSpec, theta) -> np.ndarray:
    """Coerce ``theta`` to a parameter vector inside the model's domain."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (model.param_dim,):
        raise ValueError(
            f"model '{model.name}' expects {model.param_dim} parameter(s), "
            f"got shape {theta.shape}"
        )
    if not model.domain.contains(theta):
        raise ValueError(
            f"theta {theta.tolist()} lies outside the '{model.name}' domain "
            f"[{model.domain.lower.tolist()}, {model.domain.upper.tolist()}]"
        )
    return theta


def lgss_model() -> SsmSpec:
    """Scalar AR(1) state observed through N(0, 0.1^2) noise.

    The single parameter is the AR coefficient, constrained to [-1, 1];
    the state noise variance is fixed at 1.
    """
    obs_var = 0.1 ** 2
    log_obs_var = math.log(obs_var)

    def transition_sample(theta, x_prev, rng):
        return theta[0] * x_prev + rng.standard_normal(np.shape(x_prev))

    def observation_sample(theta, x, rng):
        return x + 0.1 * rng.standard_normal(np.shape(x))

    def observation_logdensity(theta, x, y):
        return -0.5 * (_LOG_2PI + log_obs_var + (y - x) ** 2 / obs_var)

    def transition_logdensity(theta, x, x_prev):
        return -0.5 * (_LOG_2PI + (x - theta[0] * x_prev) ** 2)

    return SsmSpec(
        name="lgss",
        param_dim=1,
        domain=BoxDomain(np.array([-1.0]), np.array([1.0])),
        initial_state=0.0,
        transition_sample=transition_sample,
        observation_sample=observation_sample,
        observation_logdensity=observation_logdensity,
        transition_logdensity=transition_logdensity,
    )


def hullwhite_model() -> SsmSpec:
    """Stochastic volatility model: AR(1) log-volatility, zero-mean returns.

    Parameters are the AR coefficient in [-1, 1] and the state noise standard
    deviation in [0, 2]. The boundary value 0 for the noise scale is admitted:
    the transition then degenerates to its conditional mean.
    """
    log_base_var = 2.0 * math.log(0.7)

    def transition_sample(theta, x_prev, rng):
        # scale 0 yields the conditional mean exactly (degenerate boundary)
        return theta[0] * x_prev + theta[1] * rng.standard_normal(np.shape(x_prev))

    def observation_sample(theta, x, rng):
        return 0.7 * np.exp(0.5 * x) * rng.standard_normal(np.shape(x))

    def observation_logdensity(theta, x, y):
        log_var = log_base_var + x
        if y == 0.0:
            quad = 0.0
        else:
            # exp may overflow for very negative x; the density is then -inf
            with np.errstate(over="ignore"):
                quad = y * y * np.exp(-log_var)
        return -0.5 * (_LOG_2PI + log_var + quad)

    def transition_logdensity(theta, x, x_prev):
        if theta[1] == 0.0:
            same = np.asarray(x == theta[0] * np.asarray(x_prev), dtype=float)
            return np.where(same > 0, np.inf, -np.inf)
        var = theta[1] ** 2
        return -0.5 * (_LOG_2PI + math.log(var) + (x - theta[0] * x_prev) ** 2 / var)

    return SsmSpec(
        name="hullwhite",
        param_dim=2,
        domain=BoxDomain(np.array([-1.0, 0.0]), np.array([1.0, 2.0])),
        initial_state=0.0,
        transition_sample=transition_sample,
        observation_sample=observation_sample,
        observation_logdensity=observation_logdensity,
        transition_logdensity=transition_logdensity,
    )


MODEL_REGISTRY = {
    "lgss": lgss_model,
    "hullwhite": hullwhite_model,
}


def get_model(name: str) -> SsmSpec:
    """Look up a model by its registry name."""
    try:
        factory = MODEL_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(MODEL_REGISTRY))
        raise ValueError(f"unknown model '{name}' (known models: {known})") from None
    return factory()


def simulate(model: SsmSpec, theta, T: int, seed: int):
    """Simulate a state trajectory and observation series of length ``T``.

    Returns ``(states, observations)`` where both follow the generative
    model from the known initial state. Bitwise reproducible from ``seed``.
    """
    theta = validate_theta(model, theta)
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(seed)
    states = np.empty(T)
    obs = np.empty(T)
    x = float(model.initial_state)
    for t in range(T):
        x = float(model.transition_sample(theta, x, rng))
        states[t] = x
        obs[t] = float(model.observation_sample(theta, x, rng))
    return states, ObservationSeries(obs)
