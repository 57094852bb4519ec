"""Synthetic data for the simulation study: AR(3) drivers, hysteretic regime
paths and observations from the regime-switching structural model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import MultiSeries
from .errors import NonStationaryConfig
from .regime import RegimePath, RegimeThresholds, regime_path, thresholds_from_quantiles

AR3_PHI = ((0.6, -0.8, 0.5), (0.8, -0.6, 0.5), (0.5, 0.3, -0.7))
BETA_REGIME0 = (2.0, 0.0, 1.5)
BETA_REGIME1 = (-1.5, 4.0, 0.0)


def _rows(value, m, width=None):
    a = np.asarray(value, float)
    if a.ndim == 0 or (width is not None and a.ndim == 1 and a.shape[0] == width):
        a = np.broadcast_to(a, (m,) + a.shape)
    return np.array(a, float)


@dataclass(frozen=True)
class SimConfig:
    """Generating parameters; scalars broadcast across the ``m`` series.

    ``beta`` has shape (m, 2, p) or (2, p): regime 0 and regime 1 coefficients on lags
    1..p of each series' own driver.  Initial states default to
    ``mu = 0``, ``delta = slope`` and a zero seasonal pattern.
    """

    n: int = 500
    m: int = 3
    phi: tuple = AR3_PHI
    sigma2_driver: float | tuple = 0.5
    beta: tuple = (BETA_REGIME0, BETA_REGIME1)
    sigma2_u: float = 0.02
    sigma2_v: float = 0.05
    sigma2_w: float = 0.02
    sigma2_eps: float = 0.55
    rho: float | tuple = (0.6, 0.5, 0.5)
    slope: float | tuple = 0.0
    s: int | tuple = 4
    q_L: float = 0.3
    q_U: float = 0.7
    k_star: float = 2.0 / 3.0
    burn_in: int = 200
    initial_regime: int = 0
    mu0: float | tuple = 0.0
    kappa0: tuple | None = None
    extra: dict = field(default_factory=dict)

    def arrays(self) -> dict:
        m = self.m
        phi = np.asarray(self.phi, float)
        phi = np.broadcast_to(phi, (m, phi.shape[-1])) if phi.ndim == 1 else phi
        out = {
            "phi": np.array(phi),
            "sigma2_driver": _rows(self.sigma2_driver, m),
            "beta": np.array(np.broadcast_to(np.asarray(self.beta, float),
                                             (m,) + np.asarray(self.beta).shape[-2:])),
            "rho": _rows(self.rho, m),
            "slope": _rows(self.slope, m),
            "s": np.asarray(_rows(self.s, m), int),
            "mu0": _rows(self.mu0, m),
        }
        for key in ("phi", "sigma2_driver", "rho", "slope", "s", "mu0"):
            if out[key].shape[0] != m:
                raise ValueError(f"{key} needs one entry per series ({m})")
        return out

    @property
    def lag_order(self) -> int:
        return int(np.asarray(self.beta).shape[-1])


def companion_radius(phi_row) -> float:
    phi_row = np.asarray(phi_row, float)
    p = phi_row.size
    C = np.zeros((p, p))
    C[0] = phi_row
    C[1:, :-1] = np.eye(p - 1)
    return float(np.max(np.abs(np.linalg.eigvals(C))))


def ar_stationary_variance(phi_row, sigma2: float) -> float:
    """Stationary variance of an AR(p) process (Yule-Walker, via the
    companion-form Lyapunov equation)."""
    from scipy.linalg import solve_discrete_lyapunov

    phi_row = np.asarray(phi_row, float)
    p = phi_row.size
    C = np.zeros((p, p))
    C[0] = phi_row
    C[1:, :-1] = np.eye(p - 1)
    Q = np.zeros((p, p))
    Q[0, 0] = sigma2
    return float(solve_discrete_lyapunov(C, Q)[0, 0])


def gen_ar3(config: SimConfig, rng: np.random.Generator) -> MultiSeries:
    """Independent AR drivers started at zero; the first ``burn_in`` steps
    are discarded."""
    arr = config.arrays()
    phi, s2 = arr["phi"], arr["sigma2_driver"]
    for i, row in enumerate(phi):
        if companion_radius(row) >= 1.0:
            raise NonStationaryConfig(f"AR polynomial of series {i + 1} is not stationary")
    m, p = phi.shape
    total = config.n + config.burn_in
    eps = rng.standard_normal((total, m)) * np.sqrt(s2)
    x = np.zeros((total + p, m))
    for t in range(total):
        # x[t + p] depends on x[t + p - 1], ..., x[t]
        x[t + p] = np.einsum("ij,ji->i", phi, x[t:t + p][::-1]) + eps[t]
    return MultiSeries.from_array(x[p + config.burn_in:], [f"x{i + 1}" for i in range(m)])


def regime_thresholds(x, q_L: float, q_U: float) -> RegimeThresholds:
    return thresholds_from_quantiles(np.asarray(x, float), None, (q_L, q_U, q_L, q_U))


def gen_regimes(x, q_L: float, q_U: float, k_star: float, init: int = 0) -> RegimePath:
    """Type I paths from full-sample quantile thresholds, aggregated across series."""
    xv = np.asarray(getattr(x, "values", x), float)
    thr = regime_thresholds(xv, q_L, q_U)
    return regime_path("I", xv, None, thr, k_star, init)


@dataclass(frozen=True)
class SimTruth:
    mu: np.ndarray
    delta: np.ndarray
    kappa: np.ndarray       # (n, m) current seasonal effect
    seasonal: tuple         # per series (n, s-1) seasonal state blocks
    xi: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    eps: np.ndarray
    R: np.ndarray


def regression_term(x, beta, R) -> np.ndarray:
    """``xi_{i,t} = sum_l beta[i, R_t, l] x_{i,t-l}``; lags before the sample count as 0."""
    x = np.asarray(x, float)
    n, m = x.shape
    p = beta.shape[-1]
    xi = np.zeros((n, m))
    R = np.asarray(R, int)
    for lag in range(1, p + 1):
        coef = beta[:, :, lag - 1][:, R[lag:]].T  # (n - lag, m)
        xi[lag:] += coef * x[:-lag]
    return xi


def gen_observations(config: SimConfig, x, regimes: RegimePath, rng: np.random.Generator):
    """Observations plus the latent truth that produced them."""
    arr = config.arrays()
    xv = np.asarray(getattr(x, "values", x), float)
    n, m = xv.shape
    R = np.asarray(regimes.global_, int)
    rho, D, s = arr["rho"], arr["slope"], arr["s"]
    u = rng.standard_normal((n, m)) * np.sqrt(config.sigma2_u)
    v = rng.standard_normal((n, m)) * np.sqrt(config.sigma2_v)
    w = rng.standard_normal((n, m)) * np.sqrt(config.sigma2_w)
    eps = rng.standard_normal((n, m)) * np.sqrt(config.sigma2_eps)
    mu = np.empty((n, m))
    delta = np.empty((n, m))
    mu[0] = arr["mu0"]
    delta[0] = D
    for t in range(n - 1):
        mu[t + 1] = mu[t] + delta[t] + u[t]
        delta[t + 1] = D + rho * (delta[t] - D) + v[t]
    seasonal = []
    kappa = np.zeros((n, m))
    for i in range(m):
        k = int(s[i]) - 1
        block = np.zeros((n, max(k, 0)))
        if k > 0:
            if config.kappa0 is not None:
                block[0] = np.asarray(config.kappa0[i], float)
            for t in range(n - 1):
                block[t + 1, 0] = -block[t].sum() + w[t, i]
                block[t + 1, 1:] = block[t, :-1]
            kappa[:, i] = block[:, 0]
        seasonal.append(block)
    xi = regression_term(xv, arr["beta"], R)
    y = mu + kappa + xi + eps
    names = [f"y{i + 1}" for i in range(m)]
    index = getattr(x, "index", None)
    ys = MultiSeries(index, y, names) if index is not None else MultiSeries.from_array(y, names)
    truth = SimTruth(mu, delta, kappa, tuple(seasonal), xi, u, v, w, eps, R)
    return ys, truth


@dataclass(frozen=True)
class SimDataset:
    x: MultiSeries
    y: MultiSeries
    regimes: RegimePath
    thresholds: RegimeThresholds
    truth: SimTruth


def simulate_dataset(config: SimConfig, rng: np.random.Generator) -> SimDataset:
    x = gen_ar3(config, rng)
    thr = regime_thresholds(x.values, config.q_L, config.q_U)
    regimes = gen_regimes(x, config.q_L, config.q_U, config.k_star, config.initial_regime)
    y, truth = gen_observations(config, x, regimes, rng)
    return SimDataset(x, y, regimes, thr, truth)
