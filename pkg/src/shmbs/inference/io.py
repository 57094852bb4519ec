"""Serialization of posterior output: long-format CSV draws and a JSON summary."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..data import fmt
from ..errors import FlatSpectrum
from .mcmc import Q_NAMES, TAU_NAMES, PosteriorDraws


def dumps_json(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits and
    non-finite floats written as ``null``."""

    def enc(x, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(x, dict):
            if not x:
                return "{}"
            items = [f'{pad}{enc(str(k), level + 1)}: {enc(v, level + 1)}' for k, v in x.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(x, (list, tuple)):
            if not x:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple)) for v in x):
                return "[" + ", ".join(enc(v, level + 1) for v in x) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in x) + "\n" + end + "]"
        if isinstance(x, np.ndarray):
            return enc(x.tolist(), level)
        if isinstance(x, (bool, np.bool_)):
            return "true" if x else "false"
        if x is None:
            return "null"
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        if isinstance(x, (float, np.floating)):
            return fmt(float(x)) if math.isfinite(x) else "null"
        if isinstance(x, str):
            return json.dumps(x)
        raise TypeError(f"cannot serialize {type(x).__name__}")

    return enc(obj, 0) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps_json(obj))


def _sym_names(prefix, idx):
    out = []
    for a, i in enumerate(idx):
        for b in range(a, len(idx)):
            out.append((f"{prefix}[{i + 1},{idx[b] + 1}]", a, b))
    return out


def draw_columns(draws: PosteriorDraws) -> list[tuple[str, np.ndarray]]:
    """Every scalar chain as ``(name, values[n_iter])``."""
    m = draws.layout.m
    cols = [(name, draws.q[:, j]) for j, name in enumerate(Q_NAMES)]
    for j, name in enumerate(TAU_NAMES):
        chain = draws.tau[:, j, :]
        if chain.size and np.all(np.isnan(chain)):
            continue
        if not chain.size and np.all(np.isnan(draws.initial["tau"][j])):
            continue
        cols += [(f"{name}[{i + 1}]", chain[:, i]) for i in range(m)]
    all_idx = list(range(m))
    seas_idx = list(draws.layout.seasonal_series)
    blocks = [("Sigma_u", draws.Sigma_u, all_idx), ("Sigma_v", draws.Sigma_v, all_idx),
              ("Sigma_w", draws.Sigma_w, seas_idx)]
    if draws.Sigma_eta is not None:
        blocks += [("Sigma_eta", draws.Sigma_eta, all_idx),
                   ("Sigma_eta_star", draws.Sigma_eta_star, all_idx)]
    for prefix, chain, idx in blocks:
        cols += [(name, chain[:, a, b]) for name, a, b in _sym_names(prefix, idx)]
    cols += [(f"rho[{i + 1}]", draws.rho[:, i]) for i in range(m)]
    cols += [(f"D[{i + 1}]", draws.D[:, i]) for i in range(m)]
    cols += [(lab, draws.beta[:, j]) for j, lab in enumerate(draws.coef_labels)]
    cols += [("gamma" + lab[4:], draws.gamma[:, j].astype(float))
             for j, lab in enumerate(draws.coef_labels)]
    cols += [(name, draws.Sigma_eps[:, a, b]) for name, a, b in _sym_names("Sigma_eps", all_idx)]
    cols += [("loglik", draws.loglik), ("accepted_theta1", draws.accepted.astype(float))]
    return cols


def write_draws_csv(draws: PosteriorDraws, path) -> None:
    cols = draw_columns(draws)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "name", "value"])
        for it in range(draws.n_iter):
            for name, chain in cols:
                w.writerow([it + 1, name, fmt(chain[it])])


def read_draws_csv(path) -> dict[str, np.ndarray]:
    """Inverse of :func:`write_draws_csv`: ``name -> chain``."""
    out: dict[str, list] = {}
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            out.setdefault(rec["name"], []).append(float(rec["value"]))
    return {k: np.asarray(v) for k, v in out.items()}


def summarize(draws: PosteriorDraws, hyper: bool = True) -> dict:
    """Posterior means, standard deviations, inclusion frequencies and
    acceptance rates over the post-burn-in draws."""
    kept = draws.kept
    post = {}
    for name, chain in draw_columns(draws):
        if name.startswith("gamma") or name in ("accepted_theta1",):
            continue
        c = chain[kept]
        post[name] = {
            "mean": float(c.mean()) if c.size else None,
            "sd": float(c.std(ddof=1)) if c.size > 1 else None,
        }
    incl = {lab: float(v) for lab, v in zip(draws.coef_labels, draws.inclusion())}
    rw, ind = draws.acceptance
    out = {
        "n_iter": draws.n_iter,
        "burn_in": draws.burn_in,
        "seed": draws.seed,
        "regime_type": draws.spec.regime_type,
        "acceptance": {
            "threshold_random_walk": rw,
            "threshold_independence": ind,
            "rho": draws.rho_acceptance,
        },
        "posterior": post,
        "inclusion": incl,
        "regime1_share": float(np.mean(draws.regime_freq[draws.p:])),
    }
    if hyper:
        from .hyper import estimate_hyperparams
        try:
            out["hyperparameters"] = estimate_hyperparams(draws).to_dict()
        except FlatSpectrum as exc:
            out["hyperparameters"] = {"error": str(exc)}
    if draws.n_iter == 0:
        out["initial"] = {k: (None if v is None else np.asarray(v, float).tolist())
                          for k, v in draws.initial.items()}
    return out
