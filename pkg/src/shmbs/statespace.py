"""Linear Gaussian state-space models for the structural components.

Model (time-invariant system matrices)::

    y_t       = Z a_t + eps_t,              eps_t ~ N(0, H)
    a_{t+1}   = c + T a_t + R eta_t,        eta_t ~ N(0, Q)
    a_1       ~ N(a1, P1)

The per-series state block is ``(mu, delta, kappa_1..kappa_{s-1}[, omega,
omega*])``.  The intercept ``c`` carries the ``D (1 - rho)`` term of the
mean-reverting slope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DimensionMismatch, SingularInnovationCovariance

LOG2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class StateSpaceModel:
    Z: np.ndarray
    T: np.ndarray
    R: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    a1: np.ndarray
    P1: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        for name in ("Z", "T", "R", "H", "Q", "P1"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), float)))
        a1 = np.asarray(self.a1, float).reshape(-1)
        object.__setattr__(self, "a1", a1)
        c = np.zeros_like(a1) if self.c is None else np.asarray(self.c, float).reshape(-1)
        object.__setattr__(self, "c", c)
        p, s = self.Z.shape
        r = self.R.shape[1]
        if self.T.shape != (s, s) or self.R.shape[0] != s or self.P1.shape != (s, s):
            raise DimensionMismatch("state dimensions are inconsistent")
        if self.H.shape != (p, p) or self.Q.shape != (r, r):
            raise DimensionMismatch("covariance dimensions are inconsistent")
        if a1.shape != (s,) or c.shape != (s,):
            raise DimensionMismatch("a1 and c need one entry per state")

    @property
    def n_obs(self) -> int:
        return self.Z.shape[0]

    @property
    def n_states(self) -> int:
        return self.Z.shape[1]

    @property
    def RQR(self) -> np.ndarray:
        M = self.R @ self.Q @ self.R.T
        return 0.5 * (M + M.T)


# -- MBS assembly -------------------------------------------------------------

@dataclass(frozen=True)
class StateLayout:
    """Index bookkeeping for the stacked per-series state vector."""

    m: int
    seasonal_periods: tuple[int, ...]
    cyclical: bool
    dim: int = field(init=False)
    mu: np.ndarray = field(init=False)
    delta: np.ndarray = field(init=False)
    kappa: tuple = field(init=False)  # per series: state indices of the seasonal block
    omega: np.ndarray = field(init=False)
    omega_star: np.ndarray = field(init=False)

    def __post_init__(self):
        mu, delta, kappa, omega, omega_star = [], [], [], [], []
        pos = 0
        for s in self.seasonal_periods:
            mu.append(pos)
            delta.append(pos + 1)
            pos += 2
            kappa.append(np.arange(pos, pos + s - 1))
            pos += s - 1
            if self.cyclical:
                omega.append(pos)
                omega_star.append(pos + 1)
                pos += 2
        object.__setattr__(self, "dim", pos)
        object.__setattr__(self, "mu", np.array(mu, dtype=int))
        object.__setattr__(self, "delta", np.array(delta, dtype=int))
        object.__setattr__(self, "kappa", tuple(kappa))
        object.__setattr__(self, "omega", np.array(omega, dtype=int))
        object.__setattr__(self, "omega_star", np.array(omega_star, dtype=int))

    @property
    def seasonal_series(self) -> np.ndarray:
        """Series that carry a seasonal block (s_i >= 2)."""
        return np.array([i for i, s in enumerate(self.seasonal_periods) if s >= 2], dtype=int)

    def kappa_now(self, alpha: np.ndarray) -> np.ndarray:
        """Current seasonal effect kappa_{i,t} for every series, shape (n, m)."""
        out = np.zeros(alpha.shape[:-1] + (self.m,))
        for i, idx in enumerate(self.kappa):
            if idx.size:
                out[..., i] = alpha[..., idx[0]]
        return out

    def split(self, alpha: np.ndarray) -> dict:
        out = {
            "mu": alpha[..., self.mu],
            "delta": alpha[..., self.delta],
            "kappa": self.kappa_now(alpha),
        }
        if self.cyclical:
            out["omega"] = alpha[..., self.omega]
            out["omega_star"] = alpha[..., self.omega_star]
        return out


@dataclass(frozen=True)
class MbsComponents:
    """Hyperparameters and covariances of the trend/seasonal/cyclical blocks.

    ``Sigma_w`` covers only the series with a seasonal block; ``Sigma_eta``
    and ``Sigma_eta_star`` are used only when the cyclical block is on.
    """

    D: np.ndarray
    rho: np.ndarray
    Sigma_u: np.ndarray
    Sigma_v: np.ndarray
    Sigma_w: np.ndarray
    Sigma_eps: np.ndarray
    zeta: np.ndarray | None = None
    lam: np.ndarray | None = None
    Sigma_eta: np.ndarray | None = None
    Sigma_eta_star: np.ndarray | None = None

    def __post_init__(self):
        rho = np.asarray(self.rho, float)
        if np.any((rho <= 0) | (rho >= 1)):
            raise ValueError("rho entries must lie in (0, 1)")
        if self.zeta is not None and np.any((np.asarray(self.zeta) <= 0) | (np.asarray(self.zeta) >= 1)):
            raise ValueError("zeta entries must lie in (0, 1)")
        if self.lam is not None and np.any((np.asarray(self.lam) < 0) | (np.asarray(self.lam) > np.pi)):
            raise ValueError("lambda entries must lie in [0, pi]")


def assemble(
    layout: StateLayout, comps: MbsComponents, a1=None, P1=None, initial_state_variance: float = 1e6
) -> StateSpaceModel:
    """Build the block-structured state-space form of the MBS components.

    The observation equation sees ``mu + kappa (+ omega)`` per series; the
    regression term is assumed already removed from the observations.
    """
    m = layout.m
    D = np.asarray(comps.D, float).reshape(-1)
    rho = np.asarray(comps.rho, float).reshape(-1)
    if D.size != m or rho.size != m:
        raise DimensionMismatch(f"D and rho need {m} entries")
    seas = layout.seasonal_series
    ms = seas.size
    mats = {
        "Sigma_u": (comps.Sigma_u, m),
        "Sigma_v": (comps.Sigma_v, m),
        "Sigma_w": (comps.Sigma_w, ms),
        "Sigma_eps": (comps.Sigma_eps, m),
    }
    if layout.cyclical:
        if comps.zeta is None or comps.lam is None:
            raise DimensionMismatch("cyclical block needs zeta and lambda")
        mats["Sigma_eta"] = (comps.Sigma_eta, m)
        mats["Sigma_eta_star"] = (comps.Sigma_eta_star, m)
    for name, (mat, k) in mats.items():
        if mat is None or np.atleast_2d(mat).shape != (k, k):
            raise DimensionMismatch(f"{name} must be {k}x{k}")

    s = layout.dim
    n_dist = 2 * m + ms + (2 * m if layout.cyclical else 0)
    Z = np.zeros((m, s))
    T = np.zeros((s, s))
    R = np.zeros((s, n_dist))
    c = np.zeros(s)
    for i in range(m):
        mu, de = layout.mu[i], layout.delta[i]
        Z[i, mu] = 1.0
        T[mu, mu] = 1.0
        T[mu, de] = 1.0
        T[de, de] = rho[i]
        c[de] = D[i] * (1.0 - rho[i])
        R[mu, i] = 1.0
        R[de, m + i] = 1.0
        k = layout.kappa[i]
        if k.size:
            Z[i, k[0]] = 1.0
            T[k[0], k] = -1.0
            for j in range(1, k.size):
                T[k[j], k[j - 1]] = 1.0
        if layout.cyclical:
            o, os_ = layout.omega[i], layout.omega_star[i]
            z, lam = float(comps.zeta[i]), float(comps.lam[i])
            Z[i, o] = 1.0
            T[o, o] = z * np.cos(lam)
            T[o, os_] = z * np.sin(lam)
            T[os_, o] = -z * np.sin(lam)
            T[os_, os_] = z * np.cos(lam)
            R[o, 2 * m + ms + i] = 1.0
            R[os_, 3 * m + ms + i] = 1.0
    for j, i in enumerate(seas):
        R[layout.kappa[i][0], 2 * m + j] = 1.0
    blocks = [np.atleast_2d(comps.Sigma_u), np.atleast_2d(comps.Sigma_v), np.atleast_2d(comps.Sigma_w)]
    if layout.cyclical:
        blocks += [np.atleast_2d(comps.Sigma_eta), np.atleast_2d(comps.Sigma_eta_star)]
    Q = block_diag(*blocks)
    a1 = np.zeros(s) if a1 is None else a1
    P1 = initial_state_variance * np.eye(s) if P1 is None else P1
    return StateSpaceModel(Z, T, R, np.atleast_2d(comps.Sigma_eps), Q, a1, P1, c)


def block_diag(*blocks) -> np.ndarray:
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size))
    pos = 0
    for b in blocks:
        k = b.shape[0]
        out[pos:pos + k, pos:pos + k] = b
        pos += k
    return out


# -- numerics -----------------------------------------------------------------

def psd_sqrt(A: np.ndarray) -> np.ndarray:
    """Return ``L`` with ``L @ L.T == A`` for a symmetric PSD ``A``.

    Cholesky first; on failure fall back to a clipped eigen factorization,
    which also handles singular (e.g. zero) matrices.
    """
    A = 0.5 * (A + A.T)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(A)
        return V * np.sqrt(np.clip(w, 0.0, None))


@numba.njit(cache=True)
def _chol_inplace(A, L):
    """Cholesky factor of small SPD ``A`` into ``L``; False if not SPD."""
    n = A.shape[0]
    for j in range(n):
        s = A[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return False
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, n):
            t = A[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
        for i in range(j):
            L[i, j] = 0.0
    return True


@numba.njit(cache=True)
def _chol_inverse(L, out):
    """Inverse of ``L L^T`` given the lower Cholesky factor."""
    n = L.shape[0]
    Linv = np.zeros((n, n))
    for i in range(n):
        Linv[i, i] = 1.0 / L[i, i]
        for j in range(i):
            s = 0.0
            for k in range(j, i):
                s -= L[i, k] * Linv[k, j]
            Linv[i, j] = s / L[i, i]
    for i in range(n):
        for j in range(i + 1):
            s = 0.0
            for k in range(i, n):
                s += Linv[k, i] * Linv[k, j]
            out[i, j] = s
            out[j, i] = s


@numba.njit(cache=True)
def _filter_kernel(y, Z, T, c, RQR, H, a1, P1):
    """Forward recursion for ``k`` data columns sharing one set of gains.

    y has shape (n, p, k).  Returns predicted means/covariances, filtered
    means/covariances, innovations, inverse innovation covariances, gains,
    per-column log-likelihood and a status (0 ok, t+1 on failure at t).
    """
    n, p, k = y.shape
    s = T.shape[0]
    a_pred = np.empty((n, s, k))
    P_pred = np.empty((n, s, s))
    a_filt = np.empty((n, s, k))
    P_filt = np.empty((n, s, s))
    v_all = np.empty((n, p, k))
    Finv_all = np.empty((n, p, p))
    K_all = np.empty((n, s, p))
    loglik = np.zeros(k)
    a = np.empty((s, k))
    for j in range(k):
        a[:, j] = a1
    P = P1.copy()
    L = np.zeros((p, p))
    Finv = np.empty((p, p))
    Zt = Z.T.copy()
    Tt = T.T.copy()
    for t in range(n):
        a_pred[t] = a
        P_pred[t] = P
        ZP = Z @ P
        F = ZP @ Zt + H
        F = 0.5 * (F + F.T)
        if not _chol_inplace(F, L):
            tr = 0.0
            for i in range(p):
                tr += F[i, i]
            for i in range(p):
                F[i, i] += 1e-10 * tr
            if not _chol_inplace(F, L):
                return a_pred, P_pred, a_filt, P_filt, v_all, Finv_all, K_all, loglik, t + 1
        logdet = 0.0
        for i in range(p):
            logdet += 2.0 * np.log(L[i, i])
        _chol_inverse(L, Finv)
        M = ZP.T @ Finv  # P Z' F^-1
        v = y[t] - Z @ a
        for j in range(k):
            q = 0.0
            for i1 in range(p):
                for i2 in range(p):
                    q += v[i1, j] * Finv[i1, i2] * v[i2, j]
            loglik[j] += -0.5 * (p * 1.8378770664093453 + logdet + q)
        att = a + M @ v
        Ptt = P - M @ ZP
        Ptt = 0.5 * (Ptt + Ptt.T)
        a_filt[t] = att
        P_filt[t] = Ptt
        v_all[t] = v
        Finv_all[t] = Finv
        K_all[t] = T @ M
        a = T @ att
        for j in range(k):
            for i in range(s):
                a[i, j] += c[i]
        P = T @ Ptt @ Tt + RQR
        P = 0.5 * (P + P.T)
    return a_pred, P_pred, a_filt, P_filt, v_all, Finv_all, K_all, loglik, 0


@numba.njit(cache=True)
def _smoother_kernel(Z, T, a_pred, P_pred, v_all, Finv_all, K_all, want_cov):
    n, s, k = a_pred.shape
    alpha = np.empty((n, s, k))
    V = np.empty((n, s, s)) if want_cov else np.empty((0, s, s))
    asym = 0.0
    r = np.zeros((s, k))
    N = np.zeros((s, s))
    Zt = Z.T.copy()
    for t in range(n - 1, -1, -1):
        L = T - K_all[t] @ Z
        ZtFinv = Zt @ Finv_all[t]
        r = ZtFinv @ v_all[t] + L.T @ r
        alpha[t] = a_pred[t] + P_pred[t] @ r
        if want_cov:
            N = ZtFinv @ Z + L.T @ N @ L
            P = P_pred[t]
            Vt = P - P @ N @ P
            for i in range(s):
                for j in range(i):
                    d = abs(Vt[i, j] - Vt[j, i])
                    if d > asym:
                        asym = d
            V[t] = 0.5 * (Vt + Vt.T)
    return alpha, V, asym


# -- public API -----------------------------------------------------------------

@dataclass(frozen=True)
class FilterResult:
    a_pred: np.ndarray   # (n, s) one-step predicted state means a_t
    P_pred: np.ndarray   # (n, s, s)
    a_filt: np.ndarray   # (n, s) filtered means a_{t|t}
    P_filt: np.ndarray
    v: np.ndarray        # (n, p) innovations
    Finv: np.ndarray     # (n, p, p)
    K: np.ndarray        # (n, s, p) gains
    loglik: float


@dataclass(frozen=True)
class SmootherResult:
    mean: np.ndarray             # (n, s)
    cov: np.ndarray | None       # (n, s, s)
    max_asymmetry: float = 0.0


def _obs_array(model: StateSpaceModel, y) -> np.ndarray:
    y = np.asarray(getattr(y, "values", y), dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[1] != model.n_obs:
        raise DimensionMismatch(f"observations have {y.shape[1]} columns, model expects {model.n_obs}")
    return y


def _run_filter(model: StateSpaceModel, y3: np.ndarray):
    out = _filter_kernel(
        np.ascontiguousarray(y3), model.Z, model.T, model.c, model.RQR, model.H, model.a1, model.P1
    )
    status = out[-1]
    if status:
        raise SingularInnovationCovariance(
            f"innovation covariance singular at t={status - 1} after jitter retry"
        )
    return out[:-1]


def kalman_filter(model: StateSpaceModel, y) -> FilterResult:
    """Forward Kalman recursion; ``loglik`` is the exact Gaussian log-density
    of the whole sample under the model."""
    y = _obs_array(model, y)
    a_pred, P_pred, a_filt, P_filt, v, Finv, K, ll = _run_filter(model, y[:, :, None])
    return FilterResult(
        a_pred[:, :, 0], P_pred, a_filt[:, :, 0], P_filt, v[:, :, 0], Finv, K, float(ll[0])
    )


def kalman_smoother(model: StateSpaceModel, y, filter_output: FilterResult | None = None,
                    cov: bool = True) -> SmootherResult:
    """Smoothed means E[a_t | y_1:n] (and covariances when ``cov``)."""
    fo = kalman_filter(model, y) if filter_output is None else filter_output
    alpha, V, asym = _smoother_kernel(
        model.Z, model.T, fo.a_pred[:, :, None].copy(), fo.P_pred,
        fo.v[:, :, None].copy(), fo.Finv, fo.K, cov,
    )
    return SmootherResult(alpha[:, :, 0], V if cov else None, float(asym))


def simulate_prior(model: StateSpaceModel, n: int, rng: np.random.Generator):
    """Draw ``(alpha, y)`` from the model's joint prior."""
    s, p, r = model.n_states, model.n_obs, model.R.shape[1]
    L1 = psd_sqrt(model.P1)
    LQ = psd_sqrt(model.Q)
    LH = psd_sqrt(model.H)
    z1 = rng.standard_normal(s)
    zeta = rng.standard_normal((n, r))
    zeps = rng.standard_normal((n, p))
    eta = zeta @ LQ.T
    eps = zeps @ LH.T
    alpha = np.empty((n, s))
    alpha[0] = model.a1 + L1 @ z1
    for t in range(n - 1):
        alpha[t + 1] = model.c + model.T @ alpha[t] + model.R @ eta[t]
    y = alpha @ model.Z.T + eps
    return alpha, y


def simulation_smoother(model: StateSpaceModel, y, rng: np.random.Generator) -> np.ndarray:
    """One draw from p(alpha | y) by mean correction of a prior simulation.

    Simulates ``(alpha+, y+)`` from the prior, smooths ``y`` and ``y+`` with
    the same gains, and returns ``alpha_hat + (alpha+ - alpha_hat+)``.
    """
    y = _obs_array(model, y)
    n = y.shape[0]
    alpha_plus, y_plus = simulate_prior(model, n, rng)
    y3 = np.stack([y, y_plus], axis=2)
    a_pred, P_pred, _, _, v, Finv, K, _ = _run_filter(model, y3)
    smooth, _, _ = _smoother_kernel(model.Z, model.T, a_pred, P_pred, v, Finv, K, False)
    return smooth[:, :, 0] + (alpha_plus - smooth[:, :, 1])
