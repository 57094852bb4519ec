"""Simulation-study replications and paired synthetic backtests.

Both helpers are shared by the acceptance tests and the scripts under
``scripts/`` so the numbers they report come from the same code path.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..config import McmcSpec, ModelSpec
from ..inference.hyper import estimate_hyperparams
from ..inference.mcmc import RegimeInputs, run_mcmc
from ..simulate import SimConfig, simulate_dataset
from .backtest import BacktestData, rolling_backtest

# Driver variance placing the 30/70% driver quantiles near -0.4 / 0.4.
STUDY_DRIVER_VAR = 0.25
TRUE_TAU = (-0.4, 0.4)
TRUE_RHO = (0.6, 0.5, 0.5)
TRUE_S = 4


def study_config(n: int = 500) -> SimConfig:
    return SimConfig(n=n, sigma2_driver=STUDY_DRIVER_VAR, rho=TRUE_RHO, s=TRUE_S)


def true_beta(config: SimConfig) -> np.ndarray:
    """(m, 2, p) generating coefficients."""
    return np.array(config.arrays()["beta"])


@dataclass(frozen=True)
class Replication:
    seed: int
    inclusion: np.ndarray     # (m, 2, p) posterior inclusion frequencies
    beta: np.ndarray          # (m, 2, p) posterior means
    tau_L: np.ndarray         # (m,)
    tau_U: np.ndarray
    rho: np.ndarray           # (m,) AR(1) fits of the slope draws
    s: tuple
    acceptance: tuple
    seconds: float

    def pattern_ok(self, truth: np.ndarray) -> bool:
        return bool(np.all((self.inclusion > 0.5) == (truth != 0)))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed, "inclusion": self.inclusion.tolist(), "beta": self.beta.tolist(),
            "tau_L": self.tau_L.tolist(), "tau_U": self.tau_U.tolist(), "rho": self.rho.tolist(),
            "s": list(self.s), "acceptance": list(self.acceptance), "seconds": self.seconds,
        }


def fit_replication(seed: int, n: int = 500, n_iter: int = 1500, burn_in: int = 500) -> Replication:
    """Simulate one study dataset from ``seed`` and fit the Type I model."""
    cfg = study_config(n)
    ds = simulate_dataset(cfg, np.random.default_rng(seed))
    spec = ModelSpec(m=cfg.m, regime_type="I", seasonal_periods=(TRUE_S,),
                     mcmc=McmcSpec(n_iter=n_iter, burn_in=burn_in), seed=seed)
    t0 = time.perf_counter()
    x = ds.x.values
    draws = run_mcmc(spec, ds.y.values, RegimeInputs(x, hard=x), np.random.default_rng(seed))
    hyper = estimate_hyperparams(draws)
    tau = draws.mean("tau")
    return Replication(
        seed, draws.inclusion().reshape(draws.design_shape), draws.beta_array(),
        tau[0], tau[1], hyper.rho, hyper.s, draws.acceptance, time.perf_counter() - t0,
    )


def study_checks(reps: list[Replication], config: SimConfig | None = None) -> dict:
    """Recovery checks over replications: selection pattern, thresholds,
    coefficients and slope/seasonal hyperparameters."""
    config = study_config() if config is None else config
    truth = true_beta(config)
    n_ok = sum(r.pattern_ok(truth) for r in reps)
    betas = np.array([r.beta for r in reps])
    b_mean, b_sd = betas.mean(axis=0), betas.std(axis=0, ddof=1)
    tau_L = float(np.mean([r.tau_L for r in reps]))
    tau_U = float(np.mean([r.tau_U for r in reps]))
    rho = np.mean([r.rho for r in reps], axis=0)
    s_all = [s for r in reps for s in r.s if s is not None]
    values, counts = np.unique(s_all, return_counts=True) if s_all else (np.array([0]), [0])
    s_mode = int(values[int(np.argmax(counts))])
    return {
        "n_reps": len(reps),
        "selection_share": n_ok / len(reps),
        "selection_ok": n_ok >= 0.9 * len(reps),
        "tau_mean": [tau_L, tau_U],
        "tau_ok": abs(tau_L - TRUE_TAU[0]) <= 0.15 and abs(tau_U - TRUE_TAU[1]) <= 0.15,
        "beta_mean": b_mean.tolist(),
        "beta_sd": b_sd.tolist(),
        "beta_ok": bool(np.all(np.abs(b_mean - truth) <= 3 * b_sd)),
        "rho_mean": rho.tolist(),
        "rho_ok": bool(np.all(np.abs(rho - np.array(TRUE_RHO)) <= 0.1)),
        "s_mode": s_mode,
        "s_ok": s_mode == TRUE_S,
    }


def synthetic_backtest(seed: int, n: int = 1260, n_iter: int = 500, burn_in: int = 200,
                       window: int = 252, step: int = 63, progress=None):
    """Type I model against the single-regime baseline on one synthetic
    dataset with active regimes; returns the :class:`BacktestReport`."""
    cfg = study_config(n)
    ds = simulate_dataset(cfg, np.random.default_rng(seed))
    spec = ModelSpec(m=cfg.m, regime_type="I", seasonal_periods=(TRUE_S,),
                     mcmc=McmcSpec(n_iter=n_iter, burn_in=burn_in), seed=seed)
    models = {"type_I": spec, "no_regime": spec.replace(regime_type="none")}
    report = rolling_backtest(spec, BacktestData(ds.y, hard=ds.x.values), window, step, seed,
                              models, progress)
    report.note = f"n_iter={n_iter}, burn_in={burn_in} (reduced for runtime)"
    return report
