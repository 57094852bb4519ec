"""Regime-switching lagged regression design.

Coefficients are stored as an array ``beta[asset, regime, predictor]``; the
flat vector used by the samplers is its C-order ravel.  Observation rows are
the time points ``p .. n-1`` (the first ``p`` rows only supply lags).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, InsufficientHistory


def lagged_predictors(x: np.ndarray, p: int, mode: str, m: int) -> np.ndarray:
    """Candidate predictors per asset, shape (m, n - p, k).

    ``own``: asset i uses x[:, i] at lags 1..p (requires x with m columns).
    ``all``: every asset uses all columns of x at lags 1..p (lag-major).
    """
    x = np.asarray(x, float)
    if x.ndim == 1:
        x = x[:, None]
    n, mx = x.shape
    if n <= p:
        raise InsufficientHistory(f"need more than {p} rows for {p} lags, got {n}")
    lags = np.stack([x[p - l:n - l] for l in range(1, p + 1)], axis=1)  # (n-p, p, mx)
    if mode == "own":
        if mx != m:
            raise DimensionMismatch(f"'own' regressors need {m} driver columns, got {mx}")
        return np.ascontiguousarray(np.transpose(lags, (2, 0, 1)))  # (m, n-p, p)
    if mode == "all":
        flat = lags.reshape(n - p, p * mx)
        return np.ascontiguousarray(np.broadcast_to(flat, (m, n - p, p * mx)))
    raise ValueError(f"unknown regressor mode {mode!r}")


@dataclass(frozen=True)
class RegressionDesign:
    raw: np.ndarray        # (m, n_eff, k) candidate predictors
    p: int
    n_regimes: int         # 2 with regime switching, 1 without

    @classmethod
    def build(cls, x, p: int, mode: str, m: int, n_regimes: int = 2) -> "RegressionDesign":
        return cls(lagged_predictors(x, p, mode, m), p, n_regimes)

    @property
    def m(self) -> int:
        return self.raw.shape[0]

    @property
    def n_eff(self) -> int:
        return self.raw.shape[1]

    @property
    def k(self) -> int:
        return self.raw.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.m, self.n_regimes, self.k)

    @property
    def n_coef(self) -> int:
        return self.m * self.n_regimes * self.k

    def asset_of_coef(self) -> np.ndarray:
        return np.repeat(np.arange(self.m), self.n_regimes * self.k)

    def labels(self, mode: str = "own") -> list[str]:
        out = []
        for i in range(self.m):
            for j in range(self.n_regimes):
                for c in range(self.k):
                    if mode == "own":
                        lab = f"lag{c + 1}"
                    else:
                        mx = self.k // self.p
                        lab = f"x{c % mx + 1}_lag{c // mx + 1}"
                    out.append(f"beta[{j}][{i + 1}][{lab}]")
        return out

    def regime_weights(self, R_eff: np.ndarray) -> np.ndarray:
        """(n_eff, n_regimes) 0/1 weights selecting each coefficient block."""
        R_eff = np.asarray(R_eff)
        if self.n_regimes == 1:
            return np.ones((R_eff.shape[0], 1))
        return np.stack([1.0 - R_eff, R_eff.astype(float)], axis=1)

    def xi_by_regime(self, beta) -> np.ndarray:
        """Regression term under each regime, shape (n_regimes, n_eff, m)."""
        b = np.asarray(beta, float).reshape(self.shape)
        return np.einsum("itk,ijk->jti", self.raw, b)

    def xi(self, beta, R_eff) -> np.ndarray:
        """Regression term under the regime path, shape (n_eff, m)."""
        by = self.xi_by_regime(beta)
        if self.n_regimes == 1:
            return by[0]
        R = np.asarray(R_eff).astype(bool)
        return np.where(R[:, None], by[1], by[0])

    def stacked(self, R_eff) -> np.ndarray:
        """Dense design for vec(Y) stacked series-major: (m * n_eff, n_coef)."""
        m, n, k = self.raw.shape
        w = self.regime_weights(R_eff)  # (n, J)
        blocks = self.raw[:, :, None, :] * w[None, :, :, None]  # (m, n, J, k)
        Z = np.zeros((m, n, m, self.n_regimes * k))
        for i in range(m):
            Z[i, :, i, :] = blocks[i].reshape(n, -1)
        return Z.reshape(m * n, self.n_coef)
