"""Plug-in one-step-ahead predictors.

The structural predictor fixes every parameter at its posterior mean,
runs the Kalman filter over the regime-adjusted observations and adds the
regression term of the regime implied by the previous day's signals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import ModelSpec
from ..errors import InsufficientHistory
from ..garch import fit_garch11
from ..inference.design import RegressionDesign
from ..inference.mcmc import PosteriorDraws, RegimeInputs, observed_states
from ..regime import RegimeThresholds, regime_path, uses_hard, uses_soft
from ..statespace import MbsComponents, StateLayout, assemble, kalman_filter


def _extend(a):
    """Append a copy of the last row; it only influences rows past the end."""
    if a is None:
        return None
    a = np.asarray(a, float)
    if a.ndim == 1:
        a = a[:, None]
    return np.vstack([a, a[-1:]])


@dataclass(frozen=True)
class PlugInModel:
    spec: ModelSpec
    layout: StateLayout
    comps: MbsComponents
    beta: np.ndarray                        # (m, J, k)
    thresholds: RegimeThresholds | None     # None without regimes

    @classmethod
    def from_draws(cls, draws: PosteriorDraws) -> "PlugInModel":
        spec = draws.spec
        lay = draws.layout
        comps = MbsComponents(
            draws.mean("D"), np.clip(draws.mean("rho"), 1e-6, 1 - 1e-6),
            draws.mean("Sigma_u"), draws.mean("Sigma_v"), draws.mean("Sigma_w"),
            draws.mean("Sigma_eps"),
            np.asarray(spec.damping) if lay.cyclical else None,
            np.asarray(spec.frequency) if lay.cyclical else None,
            draws.mean("Sigma_eta") if lay.cyclical else None,
            draws.mean("Sigma_eta_star") if lay.cyclical else None,
        )
        thr = None
        if spec.regime_type != "none":
            tau = draws.mean("tau")
            hard = uses_hard(spec.regime_type)
            soft = uses_soft(spec.regime_type)
            nan = np.full(spec.m, np.nan)
            thr = RegimeThresholds(
                tau[0] if hard else nan, tau[1] if hard else nan,
                tau[2] if soft else None, tau[3] if soft else None,
            )
        return cls(spec, lay, comps, draws.beta_array(), thr)

    def regime_with_next(self, inputs: RegimeInputs, n: int) -> np.ndarray:
        """Global regime for rows 0..n (row n is the day after the data)."""
        if self.thresholds is None:
            return np.zeros(n + 1, dtype=np.int64)
        rt = self.spec.regime_type
        hard = _extend(inputs.hard) if uses_hard(rt) else None
        soft = _extend(inputs.soft) if uses_soft(rt) else None
        return regime_path(rt, hard, soft, self.thresholds, self.spec.k_star,
                           self.spec.initial_regime).global_

    def one_step_path(self, y, inputs: RegimeInputs) -> np.ndarray:
        """Row t holds the prediction of ``y_t`` from data through ``t - 1``.

        Returns ``(n + 1, m)``; the last row forecasts the day after the
        data and rows ``0..p-1`` are NaN.
        """
        y = np.asarray(getattr(y, "values", y), float)
        if y.ndim == 1:
            y = y[:, None]
        n, m = y.shape
        p = self.spec.lag_order
        if n < p + 1:
            raise InsufficientHistory(f"need at least {p + 1} rows, got {n}")
        inputs = inputs.checked(n, m)
        J = 1 if self.thresholds is None else 2
        reg = _extend(inputs.regressors)
        design = RegressionDesign.build(reg, p, self.spec.regressors, m, J)
        R = self.regime_with_next(inputs, n)
        xi = design.xi(self.beta, R[p:])          # rows p..n
        y_adj = y[p:] - xi[:-1]
        a1 = np.zeros(self.layout.dim)
        a1[self.layout.mu] = y_adj[0]
        model = assemble(self.layout, self.comps, a1=a1,
                         initial_state_variance=self.spec.initial_state_variance)
        fo = kalman_filter(model, y_adj)
        a_next = model.c + model.T @ fo.a_filt[-1]
        a_pred = np.vstack([fo.a_pred, a_next])    # rows p..n
        out = np.full((n + 1, m), np.nan)
        out[p:] = a_pred @ model.Z.T + xi
        return out

    def fitted(self, draws: PosteriorDraws, y, inputs: RegimeInputs) -> np.ndarray:
        """In-sample fit from the posterior-mean states over rows p..n-1."""
        y = np.asarray(getattr(y, "values", y), float)
        n, m = y.shape
        p = self.spec.lag_order
        J = 1 if self.thresholds is None else 2
        design = RegressionDesign.build(inputs.regressors, p, self.spec.regressors, m, J)
        R = np.asarray(draws.regime_freq) > 0.5
        return observed_states(draws.state_mean, self.layout) + design.xi(self.beta, R[p:])


def one_step_predict(draws: PosteriorDraws, y, inputs: RegimeInputs) -> np.ndarray:
    """Forecast of the day after the last row of ``y`` at posterior means."""
    return PlugInModel.from_draws(draws).one_step_path(y, inputs)[-1]


# -- AR(p) + GARCH(1,1) comparator --------------------------------------------------


@dataclass(frozen=True)
class ArGarchModel:
    """Per-asset AR(p) mean with GARCH(1,1) residual variance.

    The mean is fitted by least squares and the GARCH part by QMLE on the AR
    residuals (two-step).  Point forecasts only depend on the AR mean.
    """

    p: int
    coef: np.ndarray                # (m, p + 1): intercept then lags 1..p
    garch: tuple

    @classmethod
    def fit(cls, y, p: int) -> "ArGarchModel":
        y = np.asarray(getattr(y, "values", y), float)
        if y.ndim == 1:
            y = y[:, None]
        n, m = y.shape
        if n <= 2 * p + 1:
            raise InsufficientHistory(f"AR({p}) needs more than {2 * p + 1} rows")
        coefs, fits = [], []
        for i in range(m):
            X = np.column_stack([np.ones(n - p)] + [y[p - l:n - l, i] for l in range(1, p + 1)])
            b, *_ = np.linalg.lstsq(X, y[p:, i], rcond=None)
            coefs.append(b)
            resid = y[p:, i] - X @ b
            fits.append(fit_garch11(resid))
        return cls(p, np.array(coefs), tuple(fits))

    def one_step_path(self, y) -> np.ndarray:
        y = np.asarray(getattr(y, "values", y), float)
        if y.ndim == 1:
            y = y[:, None]
        n, m = y.shape
        p = self.p
        out = np.full((n + 1, m), np.nan)
        ye = np.vstack([y, np.zeros((1, m))])
        for t in range(p, n + 1):
            lags = ye[t - p:t][::-1]               # (p, m), lag 1 first
            out[t] = self.coef[:, 0] + np.einsum("ip,pi->i", self.coef[:, 1:], lags)
        return out
