"""Hysteretic regime indicators (Types I-IV) and their cross-asset aggregation.

Regime 1 is the low-signal state (hard signal below its lower threshold
and/or soft score low), regime 0 the high-signal state.  Points in the
hysteresis zone keep the previous regime.  Boundary conventions follow each
type's definition literally, so they differ between types:

* I:   1 if r < hL;                       0 if r > hU
* II:  1 if r < hL and D < sU;            0 if r > hU and D > sL
* III: 1 if (r <= hL and D <= sU) or (r <= hU and D <= sL)
       0 if (r > hU and D > sL) or (r > hL and D > sU)
* IV:  1 if D <= sL;                      0 if D > sU
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import fmt
from .errors import MisalignedIndex

TYPES = ("I", "II", "III", "IV")
HYSTERESIS = -1
ZONE_NAMES = {1: "regime1", 0: "regime0", HYSTERESIS: "hysteresis"}


@dataclass(frozen=True)
class RegimeThresholds:
    """Per-asset thresholds; soft ones may be absent for Type I."""

    tau_h_L: np.ndarray
    tau_h_U: np.ndarray
    tau_s_L: np.ndarray | None = None
    tau_s_U: np.ndarray | None = None
    q_h_L: float | None = None
    q_h_U: float | None = None
    q_s_L: float | None = None
    q_s_U: float | None = None

    def __post_init__(self):
        for name in ("tau_h_L", "tau_h_U", "tau_s_L", "tau_s_U"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.atleast_1d(np.asarray(val, float)))
        if np.any(self.tau_h_L > self.tau_h_U):
            raise ValueError("hard thresholds must satisfy tau_L <= tau_U")
        if self.tau_s_L is not None and np.any(self.tau_s_L > self.tau_s_U):
            raise ValueError("soft thresholds must satisfy tau_L <= tau_U")

    def to_dict(self) -> dict:
        out = {}
        for name in ("tau_h_L", "tau_h_U", "tau_s_L", "tau_s_U"):
            val = getattr(self, name)
            out[name] = None if val is None else [float(v) for v in val]
        for name in ("q_h_L", "q_h_U", "q_s_L", "q_s_U"):
            out[name] = getattr(self, name)
        return out


@dataclass(frozen=True)
class RegimePath:
    per_asset: np.ndarray  # (n, m) of 0/1
    global_: np.ndarray    # (n,) of 0/1
    initial_state: int = 0


def uses_hard(rtype: str) -> bool:
    return rtype in ("I", "II", "III")


def uses_soft(rtype: str) -> bool:
    return rtype in ("II", "III", "IV")


def classify_zone(rtype: str, r, d, hL, hU, sL=None, sU=None) -> np.ndarray:
    """Zone code for each point: 1 (regime 1), 0 (regime 0) or -1 (hysteresis).

    Inputs broadcast; thresholds may be scalars or per-asset arrays.
    """
    r = np.asarray(r, float)
    d = None if d is None else np.asarray(d, float)
    if rtype == "I":
        one, zero = r < hL, r > hU
    elif rtype == "II":
        one = (r < hL) & (d < sU)
        zero = (r > hU) & (d > sL)
    elif rtype == "III":
        one = ((r <= hL) & (d <= sU)) | ((r <= hU) & (d <= sL))
        zero = ((r > hU) & (d > sL)) | ((r > hL) & (d > sU))
    elif rtype == "IV":
        one, zero = d <= sL, d > sU
    else:
        raise ValueError(f"unknown regime type {rtype!r}")
    return np.where(one, 1, np.where(zero, 0, HYSTERESIS))


def _carry_forward(signal: np.ndarray) -> np.ndarray:
    """Replace -1 entries by the most recent decided value along axis 0.
    ``signal[0]`` must be decided."""
    n = signal.shape[0]
    idx = np.where(signal >= 0, np.arange(n).reshape((-1,) + (1,) * (signal.ndim - 1)), 0)
    np.maximum.accumulate(idx, axis=0, out=idx)
    return np.take_along_axis(signal, idx, axis=0)


def indicator_path(rtype: str, hard, soft, thr: RegimeThresholds, init: int = 0) -> np.ndarray:
    """Per-asset regime paths R_{i,t}, shape (n, m).

    ``R_{i,0} = init``; for t >= 1 the zone of ``(hard[t-1], soft[t-1])``
    decides, and the hysteresis zone carries the previous value.
    """
    ref = hard if hard is not None else soft
    ref = np.asarray(ref, float)
    if ref.ndim == 1:
        ref = ref[:, None]
    n, m = ref.shape
    h = None if hard is None else np.asarray(hard, float).reshape(n, -1)
    if uses_hard(rtype) and h is None:
        raise MisalignedIndex(f"Type {rtype} needs the hard-information driver")
    s = None
    if uses_soft(rtype):
        if soft is None:
            raise MisalignedIndex(f"Type {rtype} needs soft scores")
        s = np.asarray(soft, float)
        if s.ndim == 1:
            s = s[:, None]
        if s.shape != (n, m):
            raise MisalignedIndex(f"soft scores {s.shape} do not match hard driver {(n, m)}")
    if h is not None and h.shape != (n, m):
        raise MisalignedIndex("hard driver must be (n, m)")
    zone = classify_zone(rtype, h, s, thr.tau_h_L, thr.tau_h_U, thr.tau_s_L, thr.tau_s_U)
    signal = np.empty((n, m), dtype=np.int64)
    signal[0] = init
    signal[1:] = zone[:-1]
    return _carry_forward(signal)


def aggregate(per_asset, k_star: float, init: int = 0) -> np.ndarray:
    """Global regime: 1 if at least k* m assets say 1, 0 if at least k* m say
    0, otherwise the previous global value (``init`` before the first day).
    Regime 1 wins if both counts qualify."""
    R = np.asarray(per_asset)
    if R.ndim == 1:
        R = R[:, None]
    m = R.shape[1]
    need = k_star * m - 1e-9
    ones = R.sum(axis=1)
    zeros = m - ones
    signal = np.where(ones >= need, 1, np.where(zeros >= need, 0, HYSTERESIS))
    signal = np.concatenate([[init], signal])
    return _carry_forward(signal)[1:]


def regime_path(rtype, hard, soft, thr, k_star, init=0) -> RegimePath:
    per = indicator_path(rtype, hard, soft, thr, init)
    return RegimePath(per, aggregate(per, k_star, init), init)


# -- quantile parameterization --------------------------------------------------

def thresholds_from_quantiles(hard_train, soft_train, q) -> RegimeThresholds:
    """Map the shared quantile levels ``q = (qhL, qhU, qsL, qsU)`` to per-asset
    thresholds via empirical quantiles of the training samples."""
    qhL, qhU, qsL, qsU = (float(v) for v in q)
    hL = hU = sL = sU = None
    if hard_train is not None:
        hL, hU = np.quantile(hard_train, [qhL, qhU], axis=0)
    if soft_train is not None:
        sL, sU = np.quantile(soft_train, [qsL, qsU], axis=0)
    if hL is None:
        hL = hU = np.full(np.shape(sL), np.nan)
    return RegimeThresholds(hL, hU, sL, sU, qhL, qhU, qsL, qsU)


# -- zone diagrams --------------------------------------------------------------

def zone_grid(rtype: str, thr: RegimeThresholds, asset: int = 0, size: int = 100,
              r_range=None, d_range=None):
    """Classify a ``size x size`` grid of (hard, soft) points for one asset."""
    hL, hU = thr.tau_h_L[asset], thr.tau_h_U[asset]
    sL = None if thr.tau_s_L is None else thr.tau_s_L[asset]
    sU = None if thr.tau_s_U is None else thr.tau_s_U[asset]
    if r_range is None:
        width = max(abs(hL), abs(hU), 1.0)
        r_range = (-2 * width, 2 * width)
    if d_range is None:
        width = 1.0 if sL is None else max(abs(sL), abs(sU), 1.0)
        d_range = (-2 * width, 2 * width)
    rr = np.linspace(*r_range, size)
    dd = np.linspace(*d_range, size)
    R, D = np.meshgrid(rr, dd, indexing="ij")
    if sL is None:
        sL = sU = 0.0
    zone = classify_zone(rtype, R, D, hL, hU, sL, sU)
    return R.ravel(), D.ravel(), zone.ravel()


def write_zone_csv(path, grids: dict) -> None:
    """``grids`` maps type name -> (r, d, zone) arrays."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["type", "r_tilde", "d", "zone"])
        for rtype, (r, d, z) in grids.items():
            for a, b, c in zip(r, d, z):
                w.writerow([rtype, fmt(a), fmt(b), ZONE_NAMES[int(c)]])
