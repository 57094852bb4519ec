"""Gibbs sampler over the four parameter blocks.

Per iteration: threshold quantile levels (adaptive Metropolis), latent
states (simulation smoother on regime-adjusted observations), state
disturbance covariances (conjugate), then inclusion bits, coefficients and
the observation covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import ModelSpec
from ..errors import DimensionMismatch, McmcError, ShmbsError
from ..regime import regime_path, thresholds_from_quantiles, uses_hard, uses_soft
from ..statespace import (
    MbsComponents,
    StateLayout,
    assemble,
    kalman_filter,
    kalman_smoother,
    simulation_smoother,
)
from .design import RegressionDesign
from .likelihood import LOG_2PI, loglik_from_terms, quadratic_terms
from .samplers import (
    AdaptiveMetropolis,
    SlabPrior,
    ThetaOnePrior,
    sample_beta,
    sample_gamma,
    sample_iw_block,
    sample_sigma_eps,
    whiten,
)

Q_NAMES = ("q_h_L", "q_h_U", "q_s_L", "q_s_U")
TAU_NAMES = ("tau_h_L", "tau_h_U", "tau_s_L", "tau_s_U")


@dataclass(frozen=True)
class RegimeInputs:
    """Aligned inputs of one fit window (all with the same n rows).

    ``regressors`` feeds the lagged design; ``hard`` and ``soft`` feed the
    regime indicators and their quantile thresholds.
    """

    regressors: np.ndarray
    hard: np.ndarray | None = None
    soft: np.ndarray | None = None

    def checked(self, n: int, m: int) -> "RegimeInputs":
        def arr(a, name, cols=None):
            if a is None:
                return None
            a = np.asarray(a, float)
            if a.ndim == 1:
                a = a[:, None]
            if a.shape[0] != n or (cols is not None and a.shape[1] != cols):
                raise DimensionMismatch(f"{name} has shape {a.shape}, expected ({n}, {cols or '*'})")
            return a
        return RegimeInputs(arr(self.regressors, "regressors"), arr(self.hard, "hard", m),
                            arr(self.soft, "soft", m))


@dataclass
class PosteriorDraws:
    """Chains of every scalar block plus state summaries.

    Chains have one row per iteration (``n_iter`` rows); the first
    ``burn_in`` rows are burn-in.  State paths are kept as a running
    post-burn-in mean and as draws thinned by ``thin``.
    """

    spec: ModelSpec
    layout: StateLayout
    design_shape: tuple[int, int, int]
    coef_labels: list[str]
    p: int
    n_obs: int
    burn_in: int
    thin: int
    seed: int | None
    q: np.ndarray            # (n_iter, 4)
    tau: np.ndarray          # (n_iter, 4, m); NaN for unused signals
    Sigma_u: np.ndarray      # (n_iter, m, m)
    Sigma_v: np.ndarray
    Sigma_w: np.ndarray      # (n_iter, ms, ms)
    Sigma_eta: np.ndarray | None
    Sigma_eta_star: np.ndarray | None
    rho: np.ndarray          # (n_iter, m)
    D: np.ndarray
    beta: np.ndarray         # (n_iter, K)
    gamma: np.ndarray        # (n_iter, K) bool
    Sigma_eps: np.ndarray    # (n_iter, m, m)
    accepted: np.ndarray     # (n_iter,) threshold move accepted
    loglik: np.ndarray       # (n_iter,)
    state_mean: np.ndarray   # (n_eff, dim)
    state_draws: np.ndarray  # (n_keep, n_eff, dim)
    regime_freq: np.ndarray  # (n,) posterior frequency of regime 1
    initial: dict = field(default_factory=dict)
    acceptance: tuple[float, float] = (float("nan"), float("nan"))
    rho_acceptance: float = float("nan")

    @property
    def n_iter(self) -> int:
        return self.q.shape[0]

    @property
    def kept(self) -> slice:
        """Post-burn-in rows (all rows when there is no post-burn-in sample)."""
        return slice(self.burn_in, None) if self.n_iter > self.burn_in else slice(None)

    def mean(self, name: str) -> np.ndarray:
        chain = getattr(self, name)
        if self.n_iter == 0:
            return np.asarray(self.initial[name])
        return chain[self.kept].mean(axis=0)

    def std(self, name: str) -> np.ndarray:
        chain = getattr(self, name)
        if self.n_iter == 0:
            return np.zeros_like(np.asarray(self.initial[name], float))
        return chain[self.kept].std(axis=0, ddof=1) if chain[self.kept].shape[0] > 1 else \
            np.zeros(chain.shape[1:])

    def inclusion(self) -> np.ndarray:
        if self.n_iter == 0:
            return np.asarray(self.initial["gamma"], float)
        return self.gamma[self.kept].mean(axis=0)

    def beta_array(self, which: str = "mean") -> np.ndarray:
        """Posterior mean coefficients shaped (m, n_regimes, k)."""
        return np.asarray(self.mean("beta")).reshape(self.design_shape)


# -- helpers ----------------------------------------------------------------------


def _residual_blocks(alpha, layout: StateLayout, D, rho, zeta=None, lam=None) -> dict:
    mu = alpha[:, layout.mu]
    de = alpha[:, layout.delta]
    out = {
        "u": mu[1:] - mu[:-1] - de[:-1],
        "v": de[1:] - D - rho * (de[:-1] - D),
    }
    seas = layout.seasonal_series
    w = np.empty((alpha.shape[0] - 1, seas.size))
    for j, i in enumerate(seas):
        k = layout.kappa[i]
        w[:, j] = alpha[1:, k[0]] + alpha[:-1, k].sum(axis=1)
    out["w"] = w
    if layout.cyclical:
        o, os_ = alpha[:, layout.omega], alpha[:, layout.omega_star]
        cl, sl = zeta * np.cos(lam), zeta * np.sin(lam)
        out["eta"] = o[1:] - cl * o[:-1] - sl * os_[:-1]
        out["eta_star"] = os_[1:] + sl * o[:-1] - cl * os_[:-1]
    return out


def observed_states(alpha, layout: StateLayout) -> np.ndarray:
    """Trend plus seasonal (plus cycle) contribution per series, (n, m)."""
    out = alpha[:, layout.mu] + layout.kappa_now(alpha)
    if layout.cyclical:
        out = out + alpha[:, layout.omega]
    return out


def sample_slope_mean(delta, rho, Sigma_v, rng):
    """Draw the slope means ``D`` given a slope path and ``rho``.

    ``delta_{t+1} - rho delta_t = (1 - rho) D + v_t`` with a flat prior on D
    gives a Gaussian conditional.
    """
    x, yv = delta[:-1], delta[1:]
    N = x.shape[0]
    g = 1.0 - rho
    Sinv = np.linalg.inv(Sigma_v)
    prec = N * (g[:, None] * Sinv * g[None, :])
    resid = (yv - rho * x).sum(axis=0)
    rhs = g * (Sinv @ resid)
    L = np.linalg.cholesky(prec)
    mean = np.linalg.solve(prec, rhs)
    return mean + np.linalg.solve(L.T, rng.standard_normal(mean.size))


@dataclass
class SlopeDampingSampler:
    """Metropolis updates of each ``rho_i`` with the states integrated out.

    The target is the Kalman-filter likelihood of the regime-adjusted
    observations times a uniform prior on (0, 1); proposals are Gaussian
    random walks on ``logit(rho_i)``.  Drawing the states afterwards from
    their conditional makes the pair a valid blocked update.
    """

    step: float = 0.5
    accepted: int = 0
    proposed: int = 0

    def update(self, rho, loglik_fn, rng):
        rho = rho.copy()
        cur = loglik_fn(rho)
        for i in range(rho.size):
            z = np.log(rho[i] / (1.0 - rho[i]))
            z_new = z + self.step * rng.standard_normal()
            u = rng.uniform()
            prop = rho.copy()
            prop[i] = 1.0 / (1.0 + np.exp(-z_new))
            self.proposed += 1
            if not 0.0 < prop[i] < 1.0:
                continue
            new = loglik_fn(prop)
            # uniform prior on rho; the logit change of variables adds log rho (1 - rho)
            log_ratio = (new + np.log(prop[i] * (1.0 - prop[i]))
                         - cur - np.log(rho[i] * (1.0 - rho[i])))
            if np.log(u) < log_ratio:
                rho, cur = prop, new
                self.accepted += 1
        return rho

    @property
    def rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


class _ThresholdMap:
    """Quantile levels -> per-asset thresholds -> global regime path."""

    def __init__(self, spec: ModelSpec, inputs: RegimeInputs):
        self.rtype = spec.regime_type
        self.k_star = spec.k_star
        self.init = spec.initial_regime
        self.hard = inputs.hard if uses_hard(self.rtype) else None
        self.soft = inputs.soft if uses_soft(self.rtype) else None

    def __call__(self, q):
        thr = thresholds_from_quantiles(self.hard, self.soft, q)
        path = regime_path(self.rtype, self.hard, self.soft, thr, self.k_star, self.init)
        return thr, path.global_

    def tau(self, thr, m):
        out = np.full((4, m), np.nan)
        for j, name in enumerate(TAU_NAMES):
            val = getattr(thr, name)
            if val is not None:
                out[j] = val
        if self.hard is None:
            out[:2] = np.nan
        if self.soft is None:
            out[2:] = np.nan
        return out


def _inclusion_prior(spec: ModelSpec, design: RegressionDesign) -> np.ndarray:
    k_i = design.n_regimes * design.k
    p_i = spec.prior.expected_predictors
    p_i = k_i / 2.0 if p_i is None else p_i
    return np.full(design.n_coef, min(p_i / k_i, 1.0))


# -- the sampler ------------------------------------------------------------------


def run_mcmc(spec: ModelSpec, y, inputs: RegimeInputs, rng: np.random.Generator,
             progress=None) -> PosteriorDraws:
    """Run the Gibbs sampler for ``spec.mcmc.n_iter`` iterations.

    ``y`` is (n, m); rows ``0..p-1`` only provide lags and the states are
    sampled for rows ``p..n-1``.  Errors inside an iteration are re-raised as
    :class:`McmcError` carrying the iteration index.
    """
    y = np.asarray(getattr(y, "values", y), float)
    if y.ndim == 1:
        y = y[:, None]
    n, m = y.shape
    if m != spec.m:
        raise DimensionMismatch(f"spec has m={spec.m} but y has {m} columns")
    inputs = inputs.checked(n, m)
    p = spec.lag_order
    regimes = spec.regime_type != "none"
    design = RegressionDesign.build(inputs.regressors, p, spec.regressors, m, 2 if regimes else 1)
    n_eff = design.n_eff
    y_eff = y[p:]
    layout = StateLayout(m, spec.seasonal_periods, spec.cyclical_enabled)
    seas = layout.seasonal_series
    ms = seas.size
    pr = spec.prior
    iw_prior = {
        "u": (pr.df("w_u", m), pr.scale_u * np.eye(m)),
        "v": (pr.df("w_v", m), pr.scale_v * np.eye(m)),
        "w": (pr.df("w_w", ms), pr.scale_w * np.eye(ms)),
        "eta": (pr.df("w_w", m), pr.scale_w * np.eye(m)),
        "eta_star": (pr.df("w_w", m), pr.scale_w * np.eye(m)),
    }
    phi = pr.df("phi", m)
    nu = pr.nu * np.eye(m)
    zeta = np.asarray(spec.damping, float)
    lam = np.asarray(spec.frequency, float)
    pi = _inclusion_prior(spec, design)
    c_gamma = np.full(design.n_coef, pr.c_gamma)
    theta_prior = ThetaOnePrior(pr.h, pr.c_star)
    tmap = _ThresholdMap(spec, inputs) if regimes else None
    mc = spec.mcmc
    sampler = AdaptiveMetropolis(4, mc.burn_in, mc.rw_scale, mc.rw_init_var, mc.adapt_jitter)

    # initial values
    q = theta_prior.midpoint()
    if regimes:
        thr, R = tmap(q)
        tau = tmap.tau(thr, m)
    else:
        R = np.zeros(n, dtype=np.int64)
        tau = np.full((4, m), np.nan)
    beta = np.zeros(design.n_coef)
    gamma = np.zeros(design.n_coef, dtype=bool)
    Sigma_eps = np.atleast_2d(np.cov(y_eff, rowvar=False))
    cov0 = {k: v[1] / max(v[0] - v[1].shape[0] - 1, 1.0) for k, v in iw_prior.items()}
    D = np.asarray(spec.slope, float).copy()
    rho = np.asarray(spec.rho, float).copy()

    def components(S_eps, rho_=None):
        return MbsComponents(
            D, rho if rho_ is None else rho_, cov["u"], cov["v"], cov["w"], S_eps,
            zeta if layout.cyclical else None, lam if layout.cyclical else None,
            cov.get("eta"), cov.get("eta_star"),
        )

    def state_model(S_eps, first_obs, rho_=None):
        a1 = np.zeros(layout.dim)
        a1[layout.mu] = first_obs
        return assemble(layout, components(S_eps, rho_), a1=a1,
                        initial_state_variance=spec.initial_state_variance)

    def _marginal_loglik(rho_, y_adj):
        return kalman_filter(state_model(Sigma_eps, y_adj[0], rho_), y_adj).loglik

    rho_sampler = SlopeDampingSampler()

    cov = dict(cov0)
    if not layout.cyclical:
        cov.pop("eta")
        cov.pop("eta_star")
    try:
        alpha = kalman_smoother(state_model(Sigma_eps, y_eff[0]), y_eff, cov=False).mean
    except ShmbsError as exc:
        raise McmcError(0, exc) from exc

    initial = {
        "q": q.copy(), "tau": tau.copy(), "beta": beta.copy(), "gamma": gamma.copy(),
        "Sigma_eps": Sigma_eps.copy(), "Sigma_u": cov["u"].copy(), "Sigma_v": cov["v"].copy(),
        "Sigma_w": cov["w"].copy(), "rho": rho.copy(), "D": D.copy(),
        "Sigma_eta": cov.get("eta"), "Sigma_eta_star": cov.get("eta_star"),
    }

    N = mc.n_iter
    K = design.n_coef
    ch = {
        "q": np.empty((N, 4)), "tau": np.empty((N, 4, m)), "Sigma_u": np.empty((N, m, m)),
        "Sigma_v": np.empty((N, m, m)), "Sigma_w": np.empty((N, ms, ms)),
        "rho": np.empty((N, m)), "D": np.empty((N, m)), "beta": np.empty((N, K)),
        "gamma": np.empty((N, K), dtype=bool), "Sigma_eps": np.empty((N, m, m)),
        "accepted": np.zeros(N, dtype=bool), "loglik": np.empty(N),
    }
    if layout.cyclical:
        ch["Sigma_eta"] = np.empty((N, m, m))
        ch["Sigma_eta_star"] = np.empty((N, m, m))
    state_sum = np.zeros_like(alpha)
    regime_sum = np.zeros(n)
    kept_states = []
    n_kept = 0
    logp_q = None

    for it in range(N):
        try:
            states = observed_states(alpha, layout)
            base = y_eff - states
            # block 1: threshold quantile levels
            if regimes:
                quad, logdet = quadratic_terms(base, design.xi_by_regime(beta), Sigma_eps)
                cache = {}

                def log_target(qq):
                    lp = theta_prior.logpdf(qq)
                    if not np.isfinite(lp):
                        return -np.inf
                    thr_, R_ = tmap(qq)
                    cache[qq.tobytes()] = (thr_, R_)
                    return lp + loglik_from_terms(quad, logdet, R_[p:])

                q, _, acc = sampler.step(it, q, log_target, rng, None)
                ch["accepted"][it] = acc
                thr, R = cache.get(q.tobytes()) or tmap(q)
                tau = tmap.tau(thr, m)
            # block 2: states on regime-adjusted observations
            y_adj = y_eff - design.xi(beta, R[p:])
            if spec.update_trend:
                rho = rho_sampler.update(rho, lambda r: _marginal_loglik(r, y_adj), rng)
            alpha = simulation_smoother(state_model(Sigma_eps, y_adj[0]), y_adj, rng)
            # block 3: disturbance covariances and slope dynamics
            res = _residual_blocks(alpha, layout, D, rho, zeta, lam)
            for name in cov:
                cov[name] = sample_iw_block(res[name], *iw_prior[name], rng)
            if spec.update_trend:
                D = sample_slope_mean(alpha[:, layout.delta], rho, cov["v"], rng)
            # block 4: inclusion bits, coefficients, observation covariance
            states = observed_states(alpha, layout)
            Y = y_eff - states
            Z = design.stacked(R[p:])
            Ys, Zs = whiten(Y, Z, Sigma_eps)
            ys = Ys.T.ravel()
            G = Zs.T @ Zs
            P = Zs.T @ ys
            slab = SlabPrior.build(Z, n_eff, pr.psi, c_gamma, pi)
            allowed = np.any(Z != 0.0, axis=0)
            gamma = sample_gamma(gamma, G, P, slab, rng, allowed)
            beta = sample_beta(gamma, G, P, slab, rng)
            E = Y - design.xi(beta, R[p:])
            Sigma_eps = sample_sigma_eps(E, phi, nu, rng)
        except ShmbsError as exc:
            raise McmcError(it, exc) from exc
        except np.linalg.LinAlgError as exc:
            raise McmcError(it, exc) from exc

        quad, logdet = quadratic_terms(Y, design.xi_by_regime(beta), Sigma_eps)
        ch["loglik"][it] = loglik_from_terms(quad, logdet, R[p:]) - 0.5 * n_eff * m * LOG_2PI
        ch["q"][it] = q
        ch["tau"][it] = tau
        ch["Sigma_u"][it] = cov["u"]
        ch["Sigma_v"][it] = cov["v"]
        ch["Sigma_w"][it] = cov["w"]
        if layout.cyclical:
            ch["Sigma_eta"][it] = cov["eta"]
            ch["Sigma_eta_star"][it] = cov["eta_star"]
        ch["rho"][it] = rho
        ch["D"][it] = D
        ch["beta"][it] = beta
        ch["gamma"][it] = gamma
        ch["Sigma_eps"][it] = Sigma_eps
        if it >= mc.burn_in:
            state_sum += alpha
            regime_sum += R
            n_kept += 1
            if (it - mc.burn_in) % mc.report_thin == 0:
                kept_states.append(alpha.astype(np.float64, copy=True))
        if progress is not None:
            progress(it)

    if n_kept:
        state_mean = state_sum / n_kept
        regime_freq = regime_sum / n_kept
    else:
        state_mean = alpha
        regime_freq = np.asarray(R, float)
    state_draws = np.stack(kept_states) if kept_states else np.empty((0,) + alpha.shape)

    return PosteriorDraws(
        spec=spec, layout=layout, design_shape=design.shape,
        coef_labels=design.labels(spec.regressors), p=p, n_obs=n, burn_in=mc.burn_in,
        thin=mc.report_thin, seed=spec.seed,
        q=ch["q"], tau=ch["tau"], Sigma_u=ch["Sigma_u"], Sigma_v=ch["Sigma_v"],
        Sigma_w=ch["Sigma_w"], Sigma_eta=ch.get("Sigma_eta"),
        Sigma_eta_star=ch.get("Sigma_eta_star"), rho=ch["rho"], D=ch["D"],
        beta=ch["beta"], gamma=ch["gamma"], Sigma_eps=ch["Sigma_eps"],
        accepted=ch["accepted"], loglik=ch["loglik"], state_mean=state_mean,
        state_draws=state_draws, regime_freq=regime_freq, initial=initial,
        acceptance=sampler.acceptance_rates() if regimes else (float("nan"), float("nan")),
        rho_acceptance=rho_sampler.rate,
    )
