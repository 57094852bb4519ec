"""GARCH(1,1) pre-filter: Gaussian QMLE fit and de-GARCH standardization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.signal import lfilter
from scipy.special import expit, logit

from .errors import DegenerateSeries, NonConvergence

PERSISTENCE_CAP = 1.0 - 1e-6
MIN_OBS = 50

# (alpha, beta) starting points; omega starts at var * (1 - alpha - beta)
_STARTS = ((0.05, 0.90), (0.10, 0.80), (0.20, 0.50))


@dataclass(frozen=True)
class GarchFit:
    omega: float
    alpha: float
    beta: float
    mean: float
    h: np.ndarray
    loglik: float

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "alpha": self.alpha,
            "beta": self.beta,
            "mean": self.mean,
            "loglik": self.loglik,
        }


def conditional_variance(omega, alpha, beta, resid, h1) -> np.ndarray:
    """h_1 = h1, h_{t+1} = omega + alpha * resid_t**2 + beta * h_t."""
    resid = np.asarray(resid, float)
    h = np.empty_like(resid)
    h[0] = h1
    if resid.size > 1:
        drive = omega + alpha * resid[:-1] ** 2
        h[1:] = lfilter([1.0], [1.0, -beta], drive, zi=[beta * h1])[0]
    return h


def _gauss_loglik(resid, h) -> float:
    return float(-0.5 * np.sum(np.log(2 * np.pi) + np.log(h) + resid**2 / h))


def _unpack(theta):
    omega = np.exp(theta[0])
    pers = PERSISTENCE_CAP * expit(theta[1])
    alpha = pers * expit(theta[2])
    return omega, alpha, pers - alpha


def _pack(omega, alpha, beta):
    pers = min(alpha + beta, PERSISTENCE_CAP * (1 - 1e-9))
    share = np.clip(alpha / pers, 1e-9, 1 - 1e-9)
    return np.array([np.log(omega), logit(pers / PERSISTENCE_CAP), logit(share)])


def fit_garch11(returns, init: tuple[float, float, float] | None = None) -> GarchFit:
    """Gaussian quasi-maximum-likelihood GARCH(1,1) fit of a demeaned series.

    Parameters are optimized in an unconstrained space (log omega, logistic
    persistence, logistic ARCH share) so that ``alpha + beta <= 1 - 1e-6``.
    The best of a few fixed starting points (plus ``init`` if given) wins.
    """
    r = np.asarray(returns, float).reshape(-1)
    if r.size < MIN_OBS:
        raise DegenerateSeries(f"need at least {MIN_OBS} observations, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise DegenerateSeries("returns contain non-finite values")
    mean = float(r.mean())
    a = r - mean
    var = float(a @ a / a.size)
    if not var > 1e-300 or np.ptp(r) == 0:
        raise DegenerateSeries("series has zero variance")

    def nll(theta):
        omega, alpha, beta = _unpack(theta)
        h = conditional_variance(omega, alpha, beta, a, var)
        if not np.all(h > 0):
            return 1e300
        return -_gauss_loglik(a, h)

    starts = [_pack(var * (1 - al - be), al, be) for al, be in _STARTS]
    if init is not None:
        starts.insert(0, _pack(*init))
    best = None
    for x0 in starts:
        res = optimize.minimize(nll, x0, method="L-BFGS-B")
        if not np.isfinite(res.fun):
            continue
        res = optimize.minimize(nll, res.x, method="Nelder-Mead",
                                options={"xatol": 1e-9, "fatol": 1e-10, "maxiter": 4000})
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise NonConvergence("GARCH optimizer failed from every starting point")
    omega, alpha, beta = (float(x) for x in _unpack(best.x))
    h = conditional_variance(omega, alpha, beta, a, var)
    return GarchFit(omega, alpha, beta, mean, h, _gauss_loglik(a, h))


def garch_std_errors(fit: GarchFit, returns, step: float = 1e-5) -> np.ndarray:
    """Asymptotic standard errors of (omega, alpha, beta) from the inverse of
    the numerically differentiated observed information."""
    a = np.asarray(returns, float) - fit.mean
    h1 = fit.h[0]
    x0 = np.array([fit.omega, fit.alpha, fit.beta])

    def ll(x):
        return _gauss_loglik(a, conditional_variance(x[0], x[1], x[2], a, h1))

    k = x0.size
    eps = step * np.maximum(np.abs(x0), 1e-3)
    hess = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.eye(k)[i] * eps[i]
            ej = np.eye(k)[j] * eps[j]
            val = (ll(x0 + ei + ej) - ll(x0 + ei - ej) - ll(x0 - ei + ej) + ll(x0 - ei - ej))
            hess[i, j] = hess[j, i] = val / (4 * eps[i] * eps[j])
    cov = np.linalg.inv(-hess)
    return np.sqrt(np.diag(cov))


def degarch(fit: GarchFit, returns) -> np.ndarray:
    """Standardized returns (r_t - mean) / sqrt(h_t).

    ``returns`` may extend past the fitting sample; the variance recursion
    simply continues with the fitted parameters.
    """
    a = np.asarray(returns, float) - fit.mean
    h = conditional_variance(fit.omega, fit.alpha, fit.beta, a, fit.h[0])
    return a / np.sqrt(h)


def empirical_quantile(x, q) -> np.ndarray:
    """Linear-interpolation quantiles of order statistics (column-wise)."""
    return np.quantile(np.asarray(x, float), q, axis=0, method="linear")


def hard_thresholds(resid, q_low: float, q_high: float) -> tuple:
    """Thresholds (tau_L, tau_U) as empirical quantiles of training-window
    standardized residuals; works per column for 2-D input."""
    if not 0.0 < q_low <= q_high < 1.0:
        raise ValueError("need 0 < q_low <= q_high < 1")
    tau = empirical_quantile(resid, [q_low, q_high])
    return tau[0], tau[1]


def simulate_garch11(omega, alpha, beta, n, rng, burn=500) -> np.ndarray:
    """Gaussian GARCH(1,1) sample path (used by tests and fixtures)."""
    z = rng.standard_normal(n + burn)
    r = np.empty(n + burn)
    h = omega / (1 - alpha - beta)
    for t in range(n + burn):
        r[t] = np.sqrt(h) * z[t]
        h = omega + alpha * r[t] ** 2 + beta * h
    return r[burn:]
