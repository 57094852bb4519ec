"""Post-hoc estimates of the slope AR(1) parameters and seasonal periods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from ..errors import FlatSpectrum


@dataclass(frozen=True)
class HyperEstimate:
    D: np.ndarray
    rho: np.ndarray
    s: tuple  # per series; None when no seasonal block is fitted

    def to_dict(self) -> dict:
        return {"D": [float(v) for v in self.D], "rho": [float(v) for v in self.rho],
                "s": list(self.s)}


def fit_ar1(path) -> tuple[float, float]:
    """Least-squares AR(1) fit ``x_{t+1} = a + rho x_t``; returns ``(D, rho)``
    with ``D = a / (1 - rho)`` the process mean."""
    x = np.asarray(path, float)
    X = np.column_stack([np.ones(x.size - 1), x[:-1]])
    (a, rho), *_ = np.linalg.lstsq(X, x[1:], rcond=None)
    D = a / (1.0 - rho) if rho != 1.0 else np.nan
    return float(D), float(rho)


def fisher_g_pvalue(g: float, n_freq: int) -> float:
    """Upper bound ``N (1 - g)^(N - 1)`` on Fisher's g-test p-value for the
    largest periodogram share ``g`` among ``N`` ordinates (the leading term of
    the exact series, accurate in the small p-value range that matters)."""
    if g >= 1.0:
        return 0.0
    return float(min(1.0, np.exp(np.log(n_freq) + (n_freq - 1) * np.log1p(-g))))


def harmonic_scores(freqs, power, max_period: int) -> np.ndarray:
    """Share of periodogram power on the harmonics ``j / s`` of each
    candidate period ``s = 2..max_period`` (nearest bin, +-1 bin)."""
    total = power.sum()
    df = freqs[1] - freqs[0] if freqs.size > 1 else 1.0
    out = np.zeros(max_period + 1)
    for period in range(2, max_period + 1):
        hit = np.zeros(freqs.size, dtype=bool)
        for j in range(1, period // 2 + 1):
            hit |= np.abs(freqs - j / period) <= 1.5 * df
        out[period] = power[hit].sum() / total
    return out


def seasonal_period(kappa, max_period: int | None = None, alpha: float = 0.01,
                    share: float = 0.9) -> int:
    """Seasonal period of a path from its periodogram.

    A stochastic seasonal of period s has power at every harmonic ``j / s``,
    and the highest ordinate may sit at a harmonic rather than the
    fundamental (e.g. 1/2 for s = 4).  The estimate is therefore the smallest
    period whose harmonics carry at least ``share`` of the best candidate's
    harmonic power.  Raises :class:`FlatSpectrum` if Fisher's g-test cannot
    reject white noise at level ``alpha``.
    """
    x = np.asarray(kappa, float)
    n = x.size
    if max_period is None:
        max_period = int(min(max(n // 8, 2), 64))
    freqs, power = signal.periodogram(x, detrend="constant")
    keep = freqs > 0
    freqs, power = freqs[keep], power[keep]
    if freqs.size < 2 or not np.any(power > 0):
        raise FlatSpectrum("no interior periodogram peak")
    g = power.max() / power.sum()
    if fisher_g_pvalue(g, freqs.size) > alpha:
        raise FlatSpectrum("periodogram peak is not distinguishable from white noise")
    scores = harmonic_scores(freqs, power, max_period)
    best = scores.max()
    return int(np.flatnonzero(scores >= share * best)[0])


def estimate_hyperparams(draws, method: str = "draws") -> HyperEstimate:
    """AR(1) fits of the slope paths and periodogram periods of the seasonal
    paths from posterior state output.

    ``method="draws"`` averages AR(1) fits over the stored (thinned) slope
    draws; ``"mean_path"`` fits the posterior-mean slope path, which is
    smoother than any single draw and so biases the coefficient toward 1.
    Seasonal periods always use the posterior-mean seasonal path.
    """
    layout = draws.layout
    mean = draws.state_mean
    m = layout.m
    D = np.empty(m)
    rho = np.empty(m)
    for i in range(m):
        idx = layout.delta[i]
        if method == "draws" and draws.state_draws.shape[0]:
            fits = np.array([fit_ar1(a[:, idx]) for a in draws.state_draws])
            D[i], rho[i] = fits.mean(axis=0)
        elif method in ("mean_path", "draws"):
            D[i], rho[i] = fit_ar1(mean[:, idx])
        else:
            raise ValueError(f"unknown method {method!r}")
    s = []
    for i in range(m):
        k = layout.kappa[i]
        s.append(seasonal_period(mean[:, k[0]]) if k.size else None)
    return HyperEstimate(D, rho, tuple(s))
