"""Regime-switching multivariate structural time series with hysteretic
hard/soft information thresholds, estimated by MCMC."""

__version__ = "0.1.0"
