"""Bayesian estimation: likelihood, conditional samplers and the Gibbs driver."""

from .design import RegressionDesign, lagged_predictors
from .hyper import HyperEstimate, estimate_hyperparams
from .likelihood import log_likelihood
from .mcmc import PosteriorDraws, RegimeInputs, run_mcmc
from .samplers import (
    AdaptiveMetropolis,
    SlabPrior,
    ThetaOnePrior,
    log_marginal_gamma,
    sample_beta,
    sample_covariances,
    sample_gamma,
    sample_sigma_eps,
    whiten,
)

__all__ = [
    "AdaptiveMetropolis", "HyperEstimate", "PosteriorDraws", "RegimeInputs", "RegressionDesign",
    "SlabPrior", "ThetaOnePrior", "estimate_hyperparams", "lagged_predictors", "log_likelihood",
    "log_marginal_gamma", "run_mcmc", "sample_beta", "sample_covariances", "sample_gamma",
    "sample_sigma_eps", "whiten",
]
