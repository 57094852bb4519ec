"""Conditional samplers for the Gibbs blocks.

Covariance blocks use conjugate inverse-Wishart updates (scipy's
parameterization: ``IW(df, scale)`` has mean ``scale / (df - m - 1)``).
The regression block integrates the coefficients out of the spike-and-slab
prior to sweep the inclusion bits, then draws the active coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from ..errors import RankDeficientDesign
from .likelihood import chol_sigma

# -- threshold quantile prior ---------------------------------------------------


@dataclass(frozen=True)
class ThetaOnePrior:
    """Nested uniform prior on quantile levels ``(qhL, qhU, qsL, qsU)``.

    Per pair: ``q_L ~ U(h, b_L)`` and ``q_U | q_L ~ U(q_L + c*, 1 - h)``
    with ``b_L = min(1 - 2h, 1 - h - c*)`` so the conditional range is never
    empty.
    """

    h: float = 0.05
    c_star: float = 0.10

    @property
    def lower_range(self) -> tuple[float, float]:
        return self.h, min(1.0 - 2.0 * self.h, 1.0 - self.h - self.c_star)

    def logpdf(self, q) -> float:
        a1, b1 = self.lower_range
        b2 = 1.0 - self.h
        out = 0.0
        for lo, hi in ((q[0], q[1]), (q[2], q[3])):
            a2 = lo + self.c_star
            if not (a1 < lo < b1 and a2 < hi < b2):
                return -np.inf
            out -= np.log(b1 - a1) + np.log(b2 - a2)
        return out

    def midpoint(self) -> np.ndarray:
        a1, b1 = self.lower_range
        lo = 0.5 * (a1 + b1)
        hi = 0.5 * (lo + self.c_star + 1.0 - self.h)
        return np.array([lo, hi, lo, hi])

    def sample(self, rng, size: int) -> np.ndarray:
        a1, b1 = self.lower_range
        out = np.empty((size, 4))
        for k in (0, 2):
            lo = rng.uniform(a1, b1, size)
            out[:, k] = lo
            out[:, k + 1] = rng.uniform(lo + self.c_star, 1.0 - self.h)
        return out


@dataclass
class AdaptiveMetropolis:
    """Random-walk Metropolis during burn-in, then an independence sampler
    with a Gaussian fitted to the burn-in iterates.

    ``step`` takes the iteration index; iterates with index < ``burn_in`` are
    recorded and used once to build the independence proposal.
    """

    dim: int
    burn_in: int
    scale: float | None = None
    init_var: float = 1e-3
    jitter: float = 1e-8
    history: list = field(default_factory=list)
    mean: np.ndarray | None = None
    cov: np.ndarray | None = None
    accepted: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))
    proposed: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))

    def __post_init__(self):
        if self.scale is None:
            self.scale = 2.38**2 / self.dim
        self._rw_chol = np.sqrt(self.scale * self.init_var) * np.eye(self.dim)

    def _adapt(self):
        H = np.asarray(self.history)
        self.mean = H.mean(axis=0)
        cov = np.cov(H, rowvar=False).reshape(self.dim, self.dim) if len(H) > 1 else np.zeros(
            (self.dim, self.dim))
        self.cov = cov + self.jitter * np.eye(self.dim)
        self._ind_chol = np.linalg.cholesky(self.cov)
        self._ind = stats.multivariate_normal(self.mean, self.cov)

    @property
    def adapted(self) -> bool:
        return self.mean is not None

    def acceptance_rates(self) -> tuple[float, float]:
        rates = np.where(self.proposed > 0, self.accepted / np.maximum(self.proposed, 1), np.nan)
        return float(rates[0]), float(rates[1])

    def step(self, iteration: int, current, log_target, rng, current_logp=None):
        """Return ``(new, new_logp, accepted)``; ``log_target`` returns -inf
        outside the support so such proposals are always rejected."""
        current = np.asarray(current, float)
        logp = log_target(current) if current_logp is None else current_logp
        if iteration < self.burn_in:
            phase = 0
            prop = current + self._rw_chol @ rng.standard_normal(self.dim)
            log_q_ratio = 0.0
        else:
            if not self.adapted:
                if not self.history:
                    self.history.append(current.copy())
                self._adapt()
            phase = 1
            prop = self.mean + self._ind_chol @ rng.standard_normal(self.dim)
            log_q_ratio = self._ind.logpdf(current) - self._ind.logpdf(prop)
        u = rng.uniform()
        self.proposed[phase] += 1
        prop_logp = log_target(prop)
        accept = False
        if np.isfinite(prop_logp):
            log_ratio = prop_logp - logp + log_q_ratio
            accept = np.log(u) < log_ratio if log_ratio < 0 else True
        if accept:
            self.accepted[phase] += 1
            current, logp = prop, prop_logp
        if iteration < self.burn_in:
            self.history.append(current.copy())
        return current, logp, bool(accept)


# -- inverse-Wishart blocks -----------------------------------------------------


def invwishart_draw(df: float, scale, rng) -> np.ndarray:
    scale = np.atleast_2d(np.asarray(scale, float))
    draw = stats.invwishart.rvs(df=df, scale=scale, random_state=rng)
    return np.atleast_2d(draw)


def sample_iw_block(resid, prior_df: float, prior_scale, rng) -> np.ndarray:
    """Draw ``Sigma ~ IW(w + n, W + A A^T)`` from residual rows ``resid`` (n, k)."""
    resid = np.asarray(resid, float)
    S = np.atleast_2d(prior_scale).astype(float)
    n = 0
    if resid.size:
        resid = resid.reshape(-1, S.shape[0])
        n = resid.shape[0]
        S = S + resid.T @ resid
    return invwishart_draw(prior_df + n, 0.5 * (S + S.T), rng)


def sample_covariances(blocks: dict, priors: dict, rng) -> dict:
    """Conjugate draws for each named disturbance block.

    ``blocks[name]`` holds residual rows (n, k); ``priors[name]`` is
    ``(df, scale)``.  Blocks are drawn in the order given.
    """
    return {name: sample_iw_block(resid, *priors[name], rng) for name, resid in blocks.items()}


# -- regression block -----------------------------------------------------------


def whiten(Y, Z, Sigma_eps):
    """Apply ``Psi = (U^{-1})^T kron I_n`` with ``Sigma_eps = U^T U``.

    ``Y`` is (n, m); ``Z`` is the series-major stacked design (m*n, K) or
    None.  Returns ``(Y*, Z*)`` in the same layouts; the transformed
    errors are i.i.d. standard normal.
    """
    Y = np.asarray(Y, float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, m = Y.shape
    U = chol_sigma(Sigma_eps).T
    Ys = linalg.solve_triangular(U, Y.T, trans="T", lower=False).T
    if Z is None:
        return Ys, None
    Z = np.asarray(Z, float)
    Z3 = Z.reshape(m, n, -1)
    Uinv = linalg.solve_triangular(U, np.eye(m), lower=False)
    Zs = np.einsum("ji,jtk->itk", Uinv, Z3).reshape(m * n, -1)
    return Ys, Zs


def psi_matrix(Sigma_eps, n: int) -> np.ndarray:
    """Dense ``Psi`` acting on series-major ``vec(Y)`` (tests and small cases)."""
    U = chol_sigma(Sigma_eps).T
    Uinv = np.linalg.inv(U)
    return np.kron(Uinv.T, np.eye(n))


@dataclass(frozen=True)
class SlabPrior:
    """Spike-and-slab hyperparameters for the stacked coefficient vector."""

    D_full: np.ndarray          # psi * Z'Z / n over all candidates
    c: np.ndarray               # prior mean
    log_pi: np.ndarray          # log inclusion probabilities
    log_1m_pi: np.ndarray

    @classmethod
    def build(cls, Z, n: int, psi: float, c, pi):
        Z = np.asarray(Z, float)
        K = Z.shape[1]
        pi = np.broadcast_to(np.asarray(pi, float), (K,))
        c = np.broadcast_to(np.asarray(c, float), (K,)).copy()
        with np.errstate(divide="ignore"):
            return cls(psi * (Z.T @ Z) / n, c, np.log(pi), np.log1p(-pi))


def _factor(A):
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        ridge = 1e-10 * max(float(np.trace(A)) / A.shape[0], 1e-300)
        try:
            return np.linalg.cholesky(A + ridge * np.eye(A.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise RankDeficientDesign("design is rank deficient after ridge jitter") from exc


def log_marginal_gamma(gamma, G, P, prior: SlabPrior) -> float:
    """Log of ``p(gamma | Y*)`` up to a constant, coefficients integrated out.

    ``G = Z*'Z*`` and ``P = Z*'Y*`` over all candidates (vec layout).
    """
    gamma = np.asarray(gamma, bool)
    log_prior = float(np.sum(np.where(gamma, prior.log_pi, prior.log_1m_pi)))
    idx = np.flatnonzero(gamma)
    if idx.size == 0:
        return log_prior
    D = prior.D_full[np.ix_(idx, idx)]
    c = prior.c[idx]
    LD = _factor(D)
    LA = _factor(G[np.ix_(idx, idx)] + D)
    rhs = P[idx] + D @ c
    w = linalg.solve_triangular(LA, rhs, lower=True)
    quad = float(c @ D @ c - w @ w)
    return (log_prior + np.sum(np.log(np.diag(LD))) - np.sum(np.log(np.diag(LA)))
            - 0.5 * quad)


def sample_gamma(gamma, G, P, prior: SlabPrior, rng, allowed=None) -> np.ndarray:
    """One SSVS sweep over all bits in a fresh random order.

    Bits with ``allowed == False`` (e.g. an all-zero design column) or zero
    prior probability stay at 0.
    """
    gamma = np.array(gamma, dtype=bool)
    K = gamma.size
    ok = np.isfinite(prior.log_pi)
    if allowed is not None:
        ok &= np.asarray(allowed, bool)
    gamma &= ok
    cur = log_marginal_gamma(gamma, G, P, prior)
    for j in rng.permutation(K):
        u = rng.uniform()
        if not ok[j]:
            continue
        gamma[j] = not gamma[j]
        alt = log_marginal_gamma(gamma, G, P, prior)
        # probability of the flipped configuration
        p_flip = 1.0 / (1.0 + np.exp(min(cur - alt, 700.0)))
        if u < p_flip:
            cur = alt
        else:
            gamma[j] = not gamma[j]
    return gamma


def beta_posterior(gamma, G, P, prior: SlabPrior):
    """Mean and precision Cholesky of the active coefficients."""
    idx = np.flatnonzero(np.asarray(gamma, bool))
    if idx.size == 0:
        return idx, np.zeros(0), np.zeros((0, 0))
    D = prior.D_full[np.ix_(idx, idx)]
    LA = _factor(G[np.ix_(idx, idx)] + D)
    rhs = P[idx] + D @ prior.c[idx]
    mean = linalg.cho_solve((LA, True), rhs)
    return idx, mean, LA


def sample_beta(gamma, G, P, prior: SlabPrior, rng) -> np.ndarray:
    """Draw ``beta_gamma ~ N(beta~, (Z*'Z* + D)^{-1})``; inactive entries are 0."""
    K = np.asarray(gamma).size
    beta = np.zeros(K)
    idx, mean, LA = beta_posterior(gamma, G, P, prior)
    z = rng.standard_normal(idx.size)
    if idx.size:
        beta[idx] = mean + linalg.solve_triangular(LA, z, lower=True, trans="T")
    return beta


def sample_sigma_eps(E, phi: float, nu, rng) -> np.ndarray:
    """Draw ``Sigma_eps ~ IW(phi + n, E'E + nu)`` from residual rows E (n, m)."""
    return sample_iw_block(E, phi, nu, rng)
