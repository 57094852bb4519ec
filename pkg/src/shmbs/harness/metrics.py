"""Forecast-error metrics and the exponential reporting transform."""

from __future__ import annotations

import numpy as np

from ..errors import LengthMismatch

SCALE = 1e3


def _pair(actual, other):
    a = np.asarray(actual, float)
    b = np.asarray(other, float)
    if a.shape != b.shape:
        raise LengthMismatch(f"actual {a.shape} and predicted {b.shape} differ")
    if a.ndim == 1:
        a, b = a[:, None], b[:, None]
    if a.shape[0] == 0:
        raise LengthMismatch("no observations to score")
    return a, b


def mse(actual, fitted) -> np.ndarray:
    """In-sample mean squared error per asset, ``(1/T) sum (y - yhat)^2``."""
    a, b = _pair(actual, fitted)
    return np.mean((a - b) ** 2, axis=0)


def mspe(actual, predicted) -> np.ndarray:
    """Mean squared one-step prediction error per asset."""
    a, b = _pair(actual, predicted)
    return np.mean((a - b) ** 2, axis=0)


def exp_transform(metric) -> np.ndarray:
    """``exp(metric * 1000)``; overflows to ``inf`` for large metrics."""
    with np.errstate(over="ignore"):
        return np.exp(np.asarray(metric, float) * SCALE)
