"""Aligned panels of daily series, soft-score panels, and their CSV formats."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    CoverageGap,
    LengthMismatch,
    MissingColumn,
    NonFiniteValue,
    UnparseableDate,
    ZeroVariance,
)


def fmt(x: float) -> str:
    """Serialize a float with 17 significant digits."""
    return format(float(x), ".17g")


def _as_dates(index) -> np.ndarray:
    arr = np.asarray(index)
    if arr.dtype.kind == "M":
        return arr.astype("datetime64[D]")
    try:
        return np.array([np.datetime64(str(d), "D") for d in arr], dtype="datetime64[D]")
    except ValueError as exc:
        raise UnparseableDate(str(exc)) from exc


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultiSeries:
    """An m-variate daily panel: ``values[t, i]`` is series ``names[i]`` on
    ``index[t]``.  Immutable once built."""

    index: np.ndarray
    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        index = _as_dates(self.index)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        names = tuple(self.names)
        if values.ndim != 2 or values.shape[0] != index.shape[0]:
            raise LengthMismatch(
                f"values shape {values.shape} does not match {index.shape[0]} dates"
            )
        if values.shape[1] != len(names):
            raise LengthMismatch(f"{values.shape[1]} columns but {len(names)} names")
        if index.size > 1 and np.any(np.diff(index.astype(np.int64)) <= 0):
            raise UnparseableDate("index must be strictly increasing without duplicates")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue("panel contains non-finite values")
        index.setflags(write=False)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.n

    def slice(self, start: int, stop: int) -> "MultiSeries":
        return MultiSeries(self.index[start:stop], self.values[start:stop], self.names)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    @classmethod
    def from_array(cls, values, names=None, start="2016-01-04") -> "MultiSeries":
        """Wrap a bare array with a business-day index (for synthetic data)."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if names is None:
            names = tuple(f"y{i + 1}" for i in range(values.shape[1]))
        index = business_days(start, values.shape[0])
        return cls(index, values, tuple(names))


def business_days(start: str, n: int) -> np.ndarray:
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    return np.busday_offset(first, np.arange(n), roll="forward").astype("datetime64[D]")


# -- CSV input/output -------------------------------------------------------

def _parse_date(text: str, row: int) -> np.datetime64:
    try:
        return np.datetime64(dt.date.fromisoformat(text.strip()), "D")
    except ValueError as exc:
        raise UnparseableDate(f"row {row}: cannot parse date {text!r}") from exc


def _parse_value(text: str) -> float:
    text = text.strip()
    if text == "" or text.lower() in ("na", "nan", "null"):
        return math.nan
    try:
        return float(text)
    except ValueError:
        return math.nan


def _read_table(path, columns):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn(f"{path}: empty file") from None
        rows = [r for r in reader if any(cell.strip() for cell in r)]
    if len(header) < 2:
        raise MissingColumn(f"{path}: need a date column and at least one value column")
    if columns is None:
        columns = header[1:]
    missing = [c for c in columns if c not in header[1:]]
    if missing:
        raise MissingColumn(f"{path}: missing columns {missing}")
    pos = [header.index(c) for c in columns]
    dates, values = [], []
    for k, row in enumerate(rows, start=2):
        dates.append(_parse_date(row[0], k))
        values.append([_parse_value(row[p]) if p < len(row) else math.nan for p in pos])
    dates = np.array(dates, dtype="datetime64[D]")
    values = np.array(values, dtype=float).reshape(len(rows), len(columns))
    return dates, values, list(columns)


def _sort_checked(dates, values):
    order = np.argsort(dates, kind="stable")
    dates, values = dates[order], values[order]
    if dates.size > 1 and np.any(dates[1:] == dates[:-1]):
        dup = dates[1:][dates[1:] == dates[:-1]][0]
        raise UnparseableDate(f"duplicated date {dup}")
    return dates, values


def forward_fill(values: np.ndarray) -> np.ndarray:
    """Fill NaNs with the last finite value above them (column-wise)."""
    values = np.array(values, dtype=float)
    n = values.shape[0]
    ok = np.isfinite(values)
    idx = np.where(ok, np.arange(n)[:, None], -1)
    np.maximum.accumulate(idx, axis=0, out=idx)
    if np.any(idx < 0):
        raise NonFiniteValue("cannot forward-fill a gap in the first row")
    return np.take_along_axis(values, idx, axis=0)


def load_series(path, columns: Sequence[str] | None = None, ffill: bool = False) -> MultiSeries:
    """Read a date-first CSV into a :class:`MultiSeries`.

    ``columns`` picks and orders value columns (default: all of them).  Rows
    with a missing or non-numeric cell are an error unless ``ffill`` is set,
    in which case the previous row's value is carried forward.
    """
    dates, values, names = _read_table(path, columns)
    dates, values = _sort_checked(dates, values)
    if not np.all(np.isfinite(values)):
        if not ffill:
            bad = int(np.argwhere(~np.isfinite(values))[0, 0])
            raise NonFiniteValue(f"missing or non-finite value on {dates[bad]}")
        values = forward_fill(values)
    return MultiSeries(dates, values, tuple(names))


def write_series(series: MultiSeries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *series.names])
        for d, row in zip(series.index, series.values):
            w.writerow([str(d), *(fmt(v) for v in row)])


# -- soft information ---------------------------------------------------------

@dataclass(frozen=True)
class SoftStats:
    """Training-sample normalization constants (persisted for out-of-sample use)."""

    d1_mean: float
    d1_std: float
    d2_mean: np.ndarray
    d2_std: np.ndarray

    def apply(self, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
        z1 = (np.asarray(d1) - self.d1_mean) / self.d1_std
        z2 = (np.asarray(d2) - self.d2_mean) / self.d2_std
        return z1[:, None] + z2

    def to_dict(self) -> dict:
        return {
            "d1_mean": self.d1_mean,
            "d1_std": self.d1_std,
            "d2_mean": list(map(float, self.d2_mean)),
            "d2_std": list(map(float, self.d2_std)),
        }


@dataclass(frozen=True)
class SoftScoreSeries:
    """Daily soft scores: macro score ``d1`` (n,), per-asset news score ``d2``
    (n, m) and, once normalized, the combined score ``dt`` (n, m)."""

    index: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    names: tuple[str, ...] = ()
    dt: np.ndarray | None = None
    stats: SoftStats | None = field(default=None, compare=False)

    def __post_init__(self):
        index = _as_dates(self.index)
        d1 = np.asarray(self.d1, dtype=float).reshape(-1)
        d2 = np.asarray(self.d2, dtype=float)
        if d2.ndim == 1:
            d2 = d2[:, None]
        if d1.shape[0] != index.shape[0] or d2.shape[0] != index.shape[0]:
            raise LengthMismatch("soft-score components must match the index length")
        names = tuple(self.names) or tuple(f"d2_{i + 1}" for i in range(d2.shape[1]))
        if len(names) != d2.shape[1]:
            raise LengthMismatch("one name per d2 column required")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "d1", _frozen(d1))
        object.__setattr__(self, "d2", _frozen(d2))
        object.__setattr__(self, "names", names)
        if self.dt is not None:
            object.__setattr__(self, "dt", _frozen(self.dt))

    @property
    def m(self) -> int:
        return self.d2.shape[1]

    def slice(self, start: int, stop: int) -> "SoftScoreSeries":
        return SoftScoreSeries(
            self.index[start:stop],
            self.d1[start:stop],
            self.d2[start:stop],
            self.names,
            None if self.dt is None else self.dt[start:stop],
            self.stats,
        )


def load_soft_scores(path) -> SoftScoreSeries:
    """Read ``date, d1, <one d2 column per asset>`` rows."""
    dates, values, names = _read_table(path, None)
    if names[0] != "d1":
        raise MissingColumn(f"{path}: second column must be 'd1'")
    if values.shape[1] < 2:
        raise MissingColumn(f"{path}: need at least one d2 column")
    dates, values = _sort_checked(dates, values)
    # empty cells are days without news for that column; alignment averages them away
    return SoftScoreSeries(dates, values[:, 0], values[:, 1:], tuple(names[1:]))


def write_soft_scores(scores: SoftScoreSeries, path, combined: bool = False) -> None:
    """Write the soft-score CSV; with ``combined`` the d2 columns carry ``dt``."""
    body = scores.dt if combined else scores.d2
    if body is None:
        raise ValueError("scores have no combined component yet")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "d1", *scores.names])
        for k, d in enumerate(scores.index):
            w.writerow([str(d), fmt(scores.d1[k]), *(fmt(v) for v in body[k])])


def align_soft_scores(
    scores: SoftScoreSeries, trading_index, policy: str = "mean"
) -> SoftScoreSeries:
    """Map calendar-day scores onto trading days.

    Trading day ``T_k`` receives the scores dated in ``(T_{k-1}, T_k]``, so a
    weekend's news lands on the following Monday.  The first trading day only
    takes its own date.  Scores after the last trading day are dropped.
    """
    if policy != "mean":
        raise ValueError(f"unknown aggregation policy {policy!r}")
    trading = _as_dates(trading_index)
    if trading.size == 0:
        raise CoverageGap("empty trading index")
    lower = np.concatenate([[trading[0] - np.timedelta64(1, "D")], trading[:-1]])
    # bucket b: scores with lower[b] < date <= trading[b]
    bucket = np.searchsorted(trading, scores.index, side="left")
    keep = (bucket < trading.size)
    keep &= scores.index > lower[np.minimum(bucket, trading.size - 1)]
    b = bucket[keep]

    def agg(x):
        x = x[keep]
        ok = np.isfinite(x)
        total = np.zeros((trading.size,) + x.shape[1:])
        count = np.zeros_like(total)
        np.add.at(total, b, np.where(ok, x, 0.0))
        np.add.at(count, b, ok.astype(float))
        if np.any(count == 0):
            day = np.argwhere(count == 0)[0, 0]
            raise CoverageGap(f"no soft score on or before trading day {trading[day]}")
        return total / count

    return SoftScoreSeries(
        trading,
        agg(scores.d1),
        agg(scores.d2),
        scores.names,
        None if scores.dt is None else agg(scores.dt),
        scores.stats,
    )


def fit_soft_stats(scores: SoftScoreSeries, train: slice | tuple) -> SoftStats:
    sel = _train_mask(scores.index, train)
    if sel.sum() < 2:
        raise ZeroVariance("training span needs at least two days")
    d1, d2 = scores.d1[sel], scores.d2[sel]
    s1 = d1.std(ddof=1)
    s2 = d2.std(axis=0, ddof=1)
    if not s1 > 0:
        raise ZeroVariance("d1 is constant over the training span")
    if np.any(~(s2 > 0)):
        raise ZeroVariance("a d2 column is constant over the training span")
    return SoftStats(float(d1.mean()), float(s1), d2.mean(axis=0), s2)


def _train_mask(index, train) -> np.ndarray:
    if isinstance(train, slice):
        mask = np.zeros(index.shape[0], dtype=bool)
        mask[train] = True
        return mask
    lo, hi = (np.datetime64(str(x), "D") for x in train)
    return (index >= lo) & (index <= hi)


def normalize_and_combine(scores: SoftScoreSeries, train_range) -> SoftScoreSeries:
    """Standardize d1 and each d2 column by their training mean and sample
    standard deviation and add them: ``dt[:, i] = z(d1) + z(d2[:, i])``.

    ``train_range`` is either a positional ``slice`` or an inclusive
    ``(first_date, last_date)`` pair.  The constants are kept on ``.stats``.
    """
    stats = fit_soft_stats(scores, train_range)
    return SoftScoreSeries(
        scores.index, scores.d1, scores.d2, scores.names, stats.apply(scores.d1, scores.d2), stats
    )
