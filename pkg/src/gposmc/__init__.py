"""Maximum-likelihood inference in state-space models.

Combines particle-filter log-likelihood estimation with Gaussian-process
surrogate optimisation (expected-improvement acquisition driven by a
DIRECT inner optimiser), an SPSA baseline, and an exact Kalman oracle for
the linear-Gaussian case.
"""

from .models import (
    BoxDomain,
    ObservationSeries,
    SsmSpec,
    get_model,
    hullwhite_model,
    lgss_model,
    simulate,
    validate_theta,
)
from .kalman import grid_mle, kalman_loglik
from .particle import (
    LogLikEstimate,
    estimate_loglik,
    normality_diagnostic,
    replicate_loglik,
    resample,
)
from .gp import (
    GpFitConfig,
    GpHyperparams,
    GpPosterior,
    IterateSet,
    default_hyperparams,
    fit,
    log_marginal_likelihood,
    matern32,
)
from .acquisition import (
    AcquisitionConfig,
    expected_improvement,
    mu_max,
    next_iterate,
)
from .direct import DirectConfig, DirectResult, get_test_function, maximize
from .spsa import SpsaConfig, SpsaTrace, run_spsa
from .driver import (
    GpoConfig,
    GpoResult,
    IterationRecord,
    emit_diagnostics,
    posterior_surface,
    run_gpo,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "BoxDomain",
    "DirectConfig",
    "DirectResult",
    "GpFitConfig",
    "GpHyperparams",
    "GpPosterior",
    "GpoConfig",
    "GpoResult",
    "IterateSet",
    "IterationRecord",
    "LogLikEstimate",
    "ObservationSeries",
    "SpsaConfig",
    "SpsaTrace",
    "SsmSpec",
    "default_hyperparams",
    "emit_diagnostics",
    "estimate_loglik",
    "expected_improvement",
    "fit",
    "get_model",
    "get_test_function",
    "grid_mle",
    "hullwhite_model",
    "kalman_loglik",
    "lgss_model",
    "log_marginal_likelihood",
    "matern32",
    "maximize",
    "mu_max",
    "next_iterate",
    "normality_diagnostic",
    "posterior_surface",
    "replicate_loglik",
    "resample",
    "run_gpo",
    "run_spsa",
    "simulate",
    "validate_theta",
]
