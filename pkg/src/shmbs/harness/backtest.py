"""Rolling-window estimation and out-of-sample evaluation."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import ModelSpec, model_spec_to_dict
from ..data import MultiSeries, SoftScoreSeries, fit_soft_stats, fmt
from ..errors import BacktestError, InsufficientHistory, ShmbsError
from ..garch import degarch, fit_garch11
from ..inference.io import dumps_json
from ..inference.mcmc import RegimeInputs, run_mcmc
from .metrics import exp_transform, mse, mspe
from .predict import ArGarchModel, PlugInModel

AR_GARCH = "ar_garch"


@dataclass(frozen=True)
class ArGarchSpec:
    """Comparator entry for :func:`rolling_backtest`: per-asset AR(p)+GARCH(1,1)."""

    p: int = 3


@dataclass(frozen=True)
class BacktestData:
    """Aligned inputs for the rolling protocol.

    ``hard`` is the raw hard-information series (returns when ``degarch``
    is on); ``regressors`` defaults to the (de-GARCHed) hard series.
    """

    y: MultiSeries
    hard: np.ndarray | None = None
    soft: SoftScoreSeries | None = None
    regressors: np.ndarray | None = None
    degarch: bool = False

    @property
    def n(self) -> int:
        return self.y.n


def window_spans(n: int, window: int = 252, step: int = 63) -> list[tuple[int, int, int]]:
    """``(train_start, test_start, test_stop)`` per window; test spans tile
    the evaluation period without overlap."""
    if window < 1 or step < 1:
        raise ValueError("window and step must be positive")
    if n < window + step:
        raise InsufficientHistory(f"need at least window + step = {window + step} rows, got {n}")
    k = (n - window) // step
    return [(j * step, j * step + window, j * step + window + step) for j in range(k)]


def window_inputs(data: BacktestData, start: int, split: int, stop: int):
    """Hard, soft and regressor arrays for rows ``start..stop-1`` with every
    transformation estimated on the training rows ``start..split-1`` only."""
    info = {}
    hard = None
    if data.hard is not None:
        raw = np.asarray(data.hard, float)[start:stop]
        if raw.ndim == 1:
            raw = raw[:, None]
        if data.degarch:
            cols, fits = [], []
            for i in range(raw.shape[1]):
                f = fit_garch11(raw[: split - start, i])
                fits.append(f.to_dict())
                cols.append(degarch(f, raw[:, i]))
            hard = np.column_stack(cols)
            info["garch"] = fits
        else:
            hard = raw
    soft = None
    if data.soft is not None:
        sc = data.soft.slice(start, stop)
        stats = fit_soft_stats(sc, slice(0, split - start))
        soft = stats.apply(sc.d1, sc.d2)
        info["soft_stats"] = stats.to_dict()
    if data.regressors is not None:
        reg = np.asarray(data.regressors, float)[start:stop]
    elif hard is not None:
        reg = hard
    else:
        raise InsufficientHistory("no regressors and no hard series to build lags from")
    return RegimeInputs(reg, hard, soft), info


@dataclass
class BacktestReport:
    models: list[str]
    asset_names: list[str]
    window: int
    step: int
    seed: int
    config: dict
    per_window: list[dict] = field(default_factory=list)
    predictions: list[tuple] = field(default_factory=list)   # (date, window, model, asset, y, yhat)
    timing: list[float] = field(default_factory=list)
    note: str = ""

    @property
    def n_windows(self) -> int:
        return len(self.per_window)

    def metric_table(self, metric: str) -> dict[str, np.ndarray]:
        """model -> (n_windows, m) array of raw metric values."""
        return {name: np.array([w["models"][name][metric] for w in self.per_window])
                for name in self.models}

    def aggregate(self) -> dict:
        out = {}
        for name in self.models:
            rows = {}
            for metric in ("mse", "mspe"):
                vals = np.array([w["models"][name][metric] for w in self.per_window])
                rows[metric] = vals.mean(axis=0).tolist()
                rows[f"exp_{metric}"] = exp_transform(vals).mean(axis=0).tolist()
                rows[f"mean_{metric}"] = float(vals.mean())
            out[name] = rows
        return out

    def to_dict(self) -> dict:
        return {
            "models": self.models,
            "assets": self.asset_names,
            "window": self.window,
            "step": self.step,
            "seed": self.seed,
            "n_windows": self.n_windows,
            "note": self.note,
            "config": self.config,
            "aggregate": self.aggregate(),
            "per_window": self.per_window,
        }

    def write(self, out_dir) -> None:
        """``report.json``, ``metrics.csv``, ``predictions.csv`` and
        ``timing.csv`` (wall-clock kept apart so reports stay byte-stable)."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps_json(self.to_dict()))
        with (out / "metrics.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["window", "model", "asset", "metric", "value", "exp_value"])
            for k, win in enumerate(self.per_window):
                for name in self.models:
                    for metric in ("mse", "mspe"):
                        for a, v in zip(self.asset_names, win["models"][name][metric]):
                            w.writerow([k, name, a, metric, fmt(v), fmt(exp_transform(v))])
        with (out / "predictions.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "window", "model", "asset", "actual", "predicted", "sq_error"])
            for d, k, name, a, yv, ph in self.predictions:
                w.writerow([d, k, name, a, fmt(yv), fmt(ph), fmt((yv - ph) ** 2)])
        with (out / "timing.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["window", "seconds"])
            for k, sec in enumerate(self.timing):
                w.writerow([k, f"{sec:.3f}"])


def default_models(spec: ModelSpec) -> dict:
    """The regime model, its single-regime baseline and the AR+GARCH comparator."""
    return {
        f"type_{spec.regime_type}": spec,
        "no_regime": spec.replace(regime_type="none"),
        AR_GARCH: ArGarchSpec(spec.lag_order),
    }


def _fit_and_predict(spec, y, inputs, split, rng):
    if isinstance(spec, ArGarchSpec):
        model = ArGarchModel.fit(y[:split], spec.p)
        path = model.one_step_path(y)
        fitted = path[:split]
        summary = {"coef": model.coef.tolist()}
        return fitted, path[split:len(y)], summary, slice(model.p, split)
    train_inputs = RegimeInputs(
        inputs.regressors[:split],
        None if inputs.hard is None else inputs.hard[:split],
        None if inputs.soft is None else inputs.soft[:split],
    )
    draws = run_mcmc(spec, y[:split], train_inputs, rng)
    plug = PlugInModel.from_draws(draws)
    path = plug.one_step_path(y, inputs)
    fitted = np.full((split, y.shape[1]), np.nan)
    fitted[spec.lag_order:] = plug.fitted(draws, y[:split], train_inputs)
    summary = {
        "tau": [None if np.all(np.isnan(r)) else r.tolist() for r in draws.mean("tau")],
        "beta": draws.mean("beta").tolist(),
        "inclusion": draws.inclusion().tolist(),
        "rho": draws.mean("rho").tolist(),
        "sigma_eps_diag": np.diag(draws.mean("Sigma_eps")).tolist(),
        "acceptance": list(draws.acceptance),
    }
    regime = (draws.regime_freq > 0.5).astype(int).tolist()
    summary["regime_path"] = regime
    return fitted, path[split:len(y)], summary, slice(spec.lag_order, split)


def rolling_backtest(spec: ModelSpec, data: BacktestData, window: int = 252, step: int = 63,
                     seed: int = 0, models: dict | None = None, progress=None) -> BacktestReport:
    """Fit every model on each training window and score its daily one-step
    predictions over the following test span.

    Each (window, model) pair gets its own random stream spawned from
    ``seed``, so results do not depend on execution order.
    """
    spans = window_spans(data.n, window, step)
    models = default_models(spec) if models is None else models
    names = list(models)
    root = np.random.SeedSequence(seed)
    streams = root.spawn(len(spans))
    report = BacktestReport(
        names, list(data.y.names), window, step, seed,
        {"model": model_spec_to_dict(spec), "degarch": data.degarch,
         "n_iter": spec.mcmc.n_iter, "burn_in": spec.mcmc.burn_in},
    )
    yv = np.asarray(data.y.values, float)
    for k, (start, split, stop) in enumerate(spans):
        t0 = time.perf_counter()
        try:
            inputs, info = window_inputs(data, start, split, stop)
            y = yv[start:stop]
            rel = split - start
            entry = {
                "train": [str(data.y.index[start]), str(data.y.index[split - 1])],
                "test": [str(data.y.index[split]), str(data.y.index[stop - 1])],
                "preprocessing": info,
                "models": {},
            }
            model_streams = streams[k].spawn(len(names))
            for name, ss in zip(names, model_streams):
                fitted, preds, summary, rows = _fit_and_predict(
                    models[name], y, inputs, rel, np.random.default_rng(ss))
                entry["models"][name] = {
                    "mse": mse(y[rows], fitted[rows]).tolist(),
                    "mspe": mspe(y[rel:], preds).tolist(),
                    "posterior": summary,
                }
                for t in range(stop - split):
                    for i, a in enumerate(report.asset_names):
                        report.predictions.append(
                            (str(data.y.index[split + t]), k, name, a, y[rel + t, i], preds[t, i]))
        except ShmbsError as exc:
            raise BacktestError(k, exc) from exc
        report.per_window.append(entry)
        report.timing.append(time.perf_counter() - t0)
        if progress is not None:
            progress(k, len(spans))
    return report
