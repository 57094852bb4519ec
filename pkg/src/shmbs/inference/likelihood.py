"""Gaussian observation log-likelihood of the regime-switching model."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, SingularSigmaEps
from .design import RegressionDesign

LOG_2PI = float(np.log(2.0 * np.pi))


def chol_sigma(Sigma) -> np.ndarray:
    """Lower Cholesky factor of a covariance, raising SingularSigmaEps."""
    S = np.atleast_2d(np.asarray(Sigma, float))
    if S.shape[0] != S.shape[1]:
        raise DimensionMismatch("Sigma_eps must be square")
    try:
        L = np.linalg.cholesky(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:
        raise SingularSigmaEps("Sigma_eps is not positive definite") from exc
    if not np.all(np.isfinite(L)) or np.min(np.diag(L)) <= 0:
        raise SingularSigmaEps("Sigma_eps is not positive definite")
    return L


def quadratic_terms(resid_base, xi_by_regime, Sigma_eps):
    """Per-time Mahalanobis terms under each regime and the log-determinant.

    ``resid_base`` is y - mu - kappa over the likelihood rows (n_eff, m);
    ``xi_by_regime`` has shape (J, n_eff, m).  Returns (quad (J, n_eff), logdet).
    """
    L = chol_sigma(Sigma_eps)
    E = resid_base[None, :, :] - xi_by_regime
    # solve L w = e for every row: w = e L^{-T}
    W = np.linalg.solve(L, E.reshape(-1, L.shape[0]).T).T
    quad = np.sum(W**2, axis=1).reshape(E.shape[:2])
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return quad, logdet


def loglik_from_terms(quad, logdet: float, R_eff) -> float:
    n_eff = quad.shape[1]
    if quad.shape[0] == 1:
        picked = quad[0]
    else:
        R = np.asarray(R_eff).astype(bool)
        picked = np.where(R, quad[1], quad[0])
    return float(-0.5 * (picked.sum() + n_eff * logdet))


def log_likelihood(y, states, design: RegressionDesign, beta, Sigma_eps, R) -> float:
    """Log-density of ``y_{p+1..n}`` given states, coefficients and regimes.

    Parameters
    ----------
    y : (n, m) observations.
    states : (n, m) trend plus seasonal (plus cycle) contribution mu + kappa.
    design : lagged regression design built from the same n rows.
    beta : coefficients, reshapeable to ``design.shape``.
    Sigma_eps : (m, m) observation covariance.
    R : (n,) global regime path; only rows p..n-1 enter.
    """
    y = np.asarray(y, float)
    if y.ndim == 1:
        y = y[:, None]
    states = np.asarray(states, float).reshape(y.shape)
    p = design.p
    if y.shape[0] - p != design.n_eff or y.shape[1] != design.m:
        raise DimensionMismatch("observations do not match the regression design")
    resid = y[p:] - states[p:]
    quad, logdet = quadratic_terms(resid, design.xi_by_regime(beta), Sigma_eps)
    m = y.shape[1]
    return loglik_from_terms(quad, logdet, np.asarray(R)[p:]) - 0.5 * design.n_eff * m * LOG_2PI


def gaussian_logpdf_rows(E, Sigma) -> np.ndarray:
    """Row-wise N(0, Sigma) log-density (used for tests and diagnostics)."""
    L = chol_sigma(Sigma)
    W = np.linalg.solve(L, np.atleast_2d(E).T)
    m = L.shape[0]
    return -0.5 * (m * LOG_2PI + 2 * np.sum(np.log(np.diag(L))) + np.sum(W**2, axis=0))

