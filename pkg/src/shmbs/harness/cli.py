"""Command-line entry point.

Subcommands: ``simulate``, ``score``, ``fit``, ``backtest`` and ``zones``.
Each reads a flat ``key = value`` config file (``--config``) and accepts
``--seed`` (overrides the config's ``seed``) and ``--out`` (output
directory).  Exit status: 0 on success, 2 on configuration errors, 1 on
runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from ..config import MODEL_CONFIG_KEYS, check_keys, model_spec_from_dict, read_config
from ..data import (
    MultiSeries,
    SoftScoreSeries,
    align_soft_scores,
    fmt,
    load_series,
    load_soft_scores,
    normalize_and_combine,
)
from ..errors import ConfigError, MisalignedIndex, ShmbsError
from ..garch import degarch as degarch_series
from ..garch import fit_garch11
from ..inference.io import summarize, write_draws_csv, write_json
from ..inference.mcmc import RegimeInputs, run_mcmc
from ..regime import TYPES, RegimeThresholds, write_zone_csv, zone_grid
from ..simulate import SimConfig, simulate_dataset
from ..softinfo import load_corpus, load_lexicon, score_corpus, write_scores_csv
from .backtest import AR_GARCH, ArGarchSpec, BacktestData, rolling_backtest

DATA_KEYS = {"y", "hard", "soft", "regressors", "degarch", "ffill"}
BACKTEST_KEYS = DATA_KEYS | {"window", "step", "models"}
SIM_KEYS = {
    "n", "m", "phi", "beta", "sigma2_driver", "sigma2_u", "sigma2_v", "sigma2_w", "sigma2_eps",
    "rho", "slope", "s", "q_low", "q_high", "k_star", "burn_in_steps", "initial_regime", "seed",
}
ZONE_KEYS = {"tau_h_l", "tau_h_u", "tau_s_l", "tau_s_u", "size", "types", "r_min", "r_max",
             "d_min", "d_max", "seed"}


def _tuple(v):
    return v if isinstance(v, tuple) else (v,)


def _path(cfg, key, base: Path, required=True):
    if key not in cfg or cfg[key] is None:
        if required:
            raise ConfigError(f"config must set {key}")
        return None
    p = Path(str(cfg[key]))
    return p if p.is_absolute() else base / p


# -- simulate ---------------------------------------------------------------------


def sim_config_from_dict(cfg: dict) -> SimConfig:
    check_keys(cfg, SIM_KEYS)
    kw = {}
    ren = {"q_low": "q_L", "q_high": "q_U", "burn_in_steps": "burn_in"}
    for key, val in cfg.items():
        if key == "seed":
            continue
        kw[ren.get(key, key)] = val
    m = int(kw.get("m", 3))
    if "phi" in kw:
        kw["phi"] = tuple(np.asarray(kw["phi"], float).reshape(m, -1).tolist())
    if "beta" in kw:
        kw["beta"] = tuple(np.asarray(kw["beta"], float).reshape(m, 2, -1).tolist())
    try:
        return SimConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _write_panel(path, index, columns: dict):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *columns])
        arrays = [np.asarray(v) for v in columns.values()]
        for t, d in enumerate(index):
            w.writerow([str(d), *(fmt(a[t]) if a.dtype.kind == "f" else str(a[t]) for a in arrays)])


def cmd_simulate(args, cfg, base):
    sim = sim_config_from_dict(cfg)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    ds = simulate_dataset(sim, np.random.default_rng(seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    idx = ds.x.index
    _write_panel(out / "x.csv", idx, {n: ds.x.values[:, i] for i, n in enumerate(ds.x.names)})
    _write_panel(out / "y.csv", idx, {n: ds.y.values[:, i] for i, n in enumerate(ds.y.names)})
    reg = {f"R{i + 1}": ds.regimes.per_asset[:, i] for i in range(ds.x.m)}
    reg["R"] = ds.regimes.global_
    _write_panel(out / "regimes.csv", idx, reg)
    tr = ds.truth
    cols = {}
    for name in ("mu", "delta", "kappa", "xi"):
        arr = getattr(tr, name)
        cols.update({f"{name}{i + 1}": arr[:, i] for i in range(arr.shape[1])})
    _write_panel(out / "truth.csv", idx, cols)
    write_json({"seed": seed, "thresholds": ds.thresholds.to_dict()}, out / "simulation.json")
    return 0


# -- score ------------------------------------------------------------------------


def cmd_score(args, cfg, base):
    allowed = {"corpus", "lexicon", "assets", "seed"} | {k for k in cfg if k.startswith("watch_")}
    check_keys(cfg, allowed)
    if args.epu is None:
        raise ConfigError("score needs --epu <csv with date and the policy-uncertainty index>")
    assets = [str(a) for a in _tuple(cfg.get("assets", ()))] if "assets" in cfg else None
    if not assets:
        raise ConfigError("config must list assets")
    watch = {}
    for a in assets:
        key = f"watch_{a.lower()}"
        if key not in cfg:
            raise ConfigError(f"config must set {key}")
        watch[a] = [str(t) for t in _tuple(cfg[key])]
    lex = load_lexicon(_path(cfg, "lexicon", base))
    articles = load_corpus(_path(cfg, "corpus", base))
    days, d2 = score_corpus(articles, watch, lex)
    epu = load_series(args.epu)
    epu_days = [str(d) for d in epu.index]
    all_days = sorted(set(days) | set(epu_days))
    d1_map = dict(zip(epu_days, epu.values[:, 0]))
    d2_map = {d: row for d, row in zip(days, d2)}
    d1 = np.array([d1_map.get(d, np.nan) for d in all_days])
    d2_all = np.array([d2_map.get(d, np.full(len(assets), np.nan)) for d in all_days])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_scores_csv(out / "soft_scores.csv", all_days, d1, d2_all, assets)
    return 0


# -- data for fit / backtest --------------------------------------------------------


def _load_aligned(cfg, base):
    ffill = bool(cfg.get("ffill", False))
    y = load_series(_path(cfg, "y", base), ffill=ffill)

    def panel(key):
        p = _path(cfg, key, base, required=False)
        if p is None:
            return None
        s = load_series(p, ffill=ffill)
        if s.n != y.n or np.any(s.index != y.index):
            raise MisalignedIndex(f"{key} dates do not match y")
        return s.values

    hard = panel("hard")
    regressors = panel("regressors")
    soft = None
    sp = _path(cfg, "soft", base, required=False)
    if sp is not None:
        soft = align_soft_scores(load_soft_scores(sp), y.index)
    return y, hard, soft, regressors


def cmd_fit(args, cfg, base):
    spec = model_spec_from_dict(cfg, extra_keys=DATA_KEYS)
    if args.seed is not None:
        spec = spec.replace(seed=args.seed)
    y, hard, soft, regressors = _load_aligned(cfg, base)
    info = {}
    if hard is not None and cfg.get("degarch", False):
        fits = [fit_garch11(hard[:, i]) for i in range(hard.shape[1])]
        hard = np.column_stack([degarch_series(f, hard[:, i]) for i, f in enumerate(fits)])
        info["garch"] = [f.to_dict() for f in fits]
    dt = None
    if soft is not None:
        norm = normalize_and_combine(soft, slice(0, soft.index.size))
        dt = norm.dt
        info["soft_stats"] = norm.stats.to_dict()
    reg = regressors if regressors is not None else hard
    if reg is None:
        raise ConfigError("fit needs hard or regressors data")
    draws = run_mcmc(spec, y.values, RegimeInputs(reg, hard, dt), np.random.default_rng(spec.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_draws_csv(draws, out / "draws.csv")
    summary = summarize(draws)
    summary["preprocessing"] = info
    write_json(summary, out / "summary.json")
    return 0


def cmd_backtest(args, cfg, base):
    spec = model_spec_from_dict(cfg, extra_keys=BACKTEST_KEYS)
    if args.seed is not None:
        spec = spec.replace(seed=args.seed)
    y, hard, soft, regressors = _load_aligned(cfg, base)
    data = BacktestData(y, hard, soft, regressors, bool(cfg.get("degarch", False)))
    names = [str(v) for v in _tuple(cfg.get("models", ("regime", "none", AR_GARCH)))]
    models = {}
    for name in names:
        if name == "regime":
            models[f"type_{spec.regime_type}"] = spec
        elif name == "none":
            models["no_regime"] = spec.replace(regime_type="none")
        elif name == AR_GARCH:
            models[AR_GARCH] = ArGarchSpec(spec.lag_order)
        else:
            raise ConfigError(f"unknown model {name!r} (use regime, none, {AR_GARCH})")
    report = rolling_backtest(spec, data, int(cfg.get("window", 252)), int(cfg.get("step", 63)),
                              spec.seed, models)
    report.note = f"n_iter={spec.mcmc.n_iter}, burn_in={spec.mcmc.burn_in}"
    report.write(args.out)
    return 0


def cmd_zones(args, cfg, base):
    check_keys(cfg, ZONE_KEYS)
    try:
        thr = RegimeThresholds(
            [float(cfg.get("tau_h_l", -0.4))], [float(cfg.get("tau_h_u", 0.4))],
            [float(cfg.get("tau_s_l", -0.5))], [float(cfg.get("tau_s_u", 0.5))],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    types = [str(t) for t in _tuple(cfg.get("types", TYPES))]
    for t in types:
        if t not in TYPES:
            raise ConfigError(f"unknown regime type {t!r}")
    size = int(cfg.get("size", 100))
    r_range = (cfg["r_min"], cfg["r_max"]) if "r_min" in cfg else None
    d_range = (cfg["d_min"], cfg["d_max"]) if "d_min" in cfg else None
    grids = {t: zone_grid(t, thr, 0, size, r_range, d_range) for t in types}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_zone_csv(out / "zones.csv", grids)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "score": cmd_score,
    "fit": cmd_fit,
    "backtest": cmd_backtest,
    "zones": cmd_zones,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shmbs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="random seed")
        p.add_argument("--out", default=".", help="output directory")
        if name == "score":
            p.add_argument("--epu", default=None, help="CSV of the daily policy-uncertainty index")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = read_config(args.config)
        base = Path(args.config).resolve().parent
        return COMMANDS[args.command](args, cfg, base)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ShmbsError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
