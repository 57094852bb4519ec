"""Acceptance criteria 1-8, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary)
before asserting.  Criteria 5 and 7 are long-running statistical checks.
"""

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import (
    conditional_state_mean,
    dense_regime_loglik,
    gamma_posterior_enumeration,
    joint_loglik,
)
from shmbs.harness.study import fit_replication, study_checks, synthetic_backtest
from shmbs.inference.design import RegressionDesign
from shmbs.inference.likelihood import log_likelihood
from shmbs.inference.samplers import SlabPrior, psi_matrix, sample_gamma, whiten
from shmbs.regime import HYSTERESIS, RegimeThresholds, aggregate, indicator_path, zone_grid
from shmbs.softinfo import Lexicon, score_sentence
from shmbs.statespace import StateSpaceModel, kalman_filter, kalman_smoother, simulation_smoother


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def spd(rng, k, scale):
    A = rng.standard_normal((k, k))
    return scale * (A @ A.T + k * np.eye(k))


def test_criterion1_oracle_equivalence():
    rng = np.random.default_rng(1)
    worst_ll = worst_sm = worst_reg = 0.0
    for _ in range(30):
        n, p, s = rng.integers(1, 6), rng.integers(1, 4), rng.integers(1, 4)
        model = StateSpaceModel(
            Z=rng.standard_normal((p, s)), T=rng.uniform(-0.6, 0.6, (s, s)),
            R=rng.standard_normal((s, s)), H=spd(rng, p, 0.5), Q=spd(rng, s, 0.3),
            a1=rng.standard_normal(s), P1=spd(rng, s, 1.0), c=0.1 * rng.standard_normal(s),
        )
        y = rng.standard_normal((n, p))
        args = (model.Z, model.T, model.R, model.H, model.Q, model.a1, model.P1)
        ll = kalman_filter(model, y).loglik
        worst_ll = max(worst_ll, rel_err(ll, joint_loglik(y, *args, c=model.c)))
        sm = kalman_smoother(model, y).mean
        worst_sm = max(worst_sm, rel_err(sm, conditional_state_mean(y, *args, c=model.c)))
    for _ in range(30):
        n, m = rng.integers(2, 7), rng.integers(1, 4)
        lag = rng.integers(1, min(4, n))
        y, states, x = (rng.standard_normal((n, m)) for _ in range(3))
        beta = rng.standard_normal((m, 2, lag))
        Sigma = spd(rng, m, 0.5)
        R = rng.integers(0, 2, n)
        design = RegressionDesign.build(x, lag, "own", m)
        got = log_likelihood(y, states, design, beta.ravel(), Sigma, R)
        worst_reg = max(worst_reg, rel_err(got, dense_regime_loglik(y, states, x, lag, beta, Sigma, R)))
    ok = worst_ll < 1e-8 and worst_sm < 1e-8 and worst_reg < 1e-10
    record(1, ok, f"max rel err: filter loglik {worst_ll:.1e}, smoother {worst_sm:.1e}, "
                  f"regime likelihood {worst_reg:.1e}")


def test_criterion2_simulation_smoother_calibration():
    model = StateSpaceModel(Z=[[1.0]], T=[[0.8]], R=[[1.0]], H=[[0.5]], Q=[[0.4]], a1=[0.2],
                            P1=[[1.0]])
    y = np.array([0.7, -0.3, 1.2])
    rng = np.random.default_rng(2)
    draws = np.array([simulation_smoother(model, y, rng)[:, 0] for _ in range(5000)])
    want = conditional_state_mean(y[:, None], model.Z, model.T, model.R, model.H, model.Q,
                                  model.a1, model.P1)[:, 0]
    z = (draws.mean(axis=0) - want) / (draws.std(axis=0, ddof=1) / np.sqrt(len(draws)))
    record(2, np.all(np.abs(z) < 3), f"|z| = {np.round(np.abs(z), 2).tolist()} (limit 3)")


def test_criterion3_ssvs_exactness():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(50, 3))
    y = Z @ np.array([0.3, 0.0, 0.12]) + rng.normal(size=50)
    configs, probs = gamma_posterior_enumeration(Z, y, 1.0, 0.0, 0.5)
    prior = SlabPrior.build(Z, 50, 1.0, 0.0, 0.5)
    G, P = Z.T @ Z, Z.T @ y
    rng = np.random.default_rng(3)
    g = np.zeros(3, bool)
    counts = np.zeros(8)
    for _ in range(20_000):
        g = sample_gamma(g, G, P, prior, rng)
        counts[int("".join("1" if b else "0" for b in g), 2)] += 1
    tv = 0.5 * np.abs(counts / counts.sum() - probs).sum()
    record(3, tv < 0.02, f"TV distance {tv:.4f} (limit 0.02), max config prob {probs.max():.2f}")


def test_criterion4_whitening_identity():
    rng = np.random.default_rng(4)
    worst = 0.0
    for m in range(1, 5):
        for n in (1, 3, 6):
            S = spd(rng, m, 1.0)
            Psi = psi_matrix(S, n)
            err = np.abs(Psi @ np.kron(S, np.eye(n)) @ Psi.T - np.eye(m * n)).max()
            Y = rng.standard_normal((n, m))
            Ys, _ = whiten(Y, None, S)
            err = max(err, np.abs(Ys.T.ravel() - Psi @ Y.T.ravel()).max())
            worst = max(worst, err)
    record(4, worst < 1e-12, f"max |Psi (Sigma x I) Psi' - I| = {worst:.1e} (limit 1e-12)")


@pytest.mark.slow
def test_criterion5_simulation_study():
    reps = [fit_replication(seed, n=500, n_iter=1500, burn_in=500) for seed in range(20)]
    c = study_checks(reps)
    ok = c["selection_ok"] and c["tau_ok"] and c["beta_ok"] and c["rho_ok"] and c["s_ok"]
    slowest = max(r.seconds for r in reps)
    record(5, ok and slowest <= 600,
           f"(a) pattern {c['selection_share']:.0%}; (b) tau {np.round(c['tau_mean'], 3).tolist()}; "
           f"(c) beta within 3 sd: {c['beta_ok']}; (d) rho {np.round(c['rho_mean'], 3).tolist()}, "
           f"modal s {c['s_mode']}; slowest fit {slowest:.0f}s")


def test_criterion6_regime_logic():
    rng = np.random.default_rng(6)
    r = rng.standard_normal(1000)
    tar = indicator_path("I", r, None, RegimeThresholds([0.2], [0.2]), init=0)[:, 0]
    tar_ok = np.array_equal(tar[1:], (r[:-1] < 0.2).astype(int))
    thr = RegimeThresholds([-0.5], [0.5], [-0.3], [0.4])
    z1, z2, z3 = (zone_grid(t, thr, 0, 100)[2] for t in ("I", "II", "III"))
    nest_ok = (np.all((z1 == HYSTERESIS) <= (z2 == HYSTERESIS))
               and np.all((z2 == 1) <= (z3 == 1)) and np.all((z2 == 0) <= (z3 == 0)))
    per = np.array([[0, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1], [0, 0, 0], [0, 1, 1]])
    agg_ok = (np.array_equal(aggregate(per, 1.0, 0), [0, 0, 1, 1, 0, 0])
              and np.array_equal(aggregate(per, 2 / 3, 0), [0, 1, 1, 1, 0, 1])
              and np.array_equal(aggregate(np.array([[1, 0], [0, 1]]), 0.5, 0), [1, 1]))
    hand = indicator_path("I", np.array([-1.0, 0, 1, 0, -1]), None,
                          RegimeThresholds([-0.5], [0.5]), 0)[:, 0]
    hand_ok = np.array_equal(hand, [0, 1, 1, 0, 0])
    record(6, tar_ok and nest_ok and agg_ok and hand_ok,
           f"TAR reduction {tar_ok}, zone nesting {nest_ok}, aggregate traces {agg_ok}, "
           f"Type I trace {hand_ok}")


@pytest.mark.slow
def test_criterion7_synthetic_backtest():
    wins, windows, notes = 0, set(), set()
    rows = []
    for seed in range(10):
        rep = synthetic_backtest(seed, n=1260, n_iter=500, burn_in=200)
        agg = rep.aggregate()
        a, b = agg["type_I"]["mean_mspe"], agg["no_regime"]["mean_mspe"]
        wins += a <= b
        rows.append((round(a, 4), round(b, 4)))
        windows.add(rep.n_windows)
        notes.add(rep.note)
    ok = wins >= 7 and windows == {16} and all("n_iter=500" in n for n in notes)
    record(7, ok, f"Type I <= no-regime MSPE in {wins}/10; windows {sorted(windows)}; "
                  f"(type_I, no_regime) {rows}")


def test_criterion8_soft_information_properties():
    lex = Lexicon.from_rows([("good", 0.5, "adjective"), ("falls", -0.2, "verb"),
                             ("rally", 0.9, "other"), ("crash", -1.0, "verb")])
    rng = np.random.default_rng(8)
    words = ["good", "falls", "rally", "crash", "the", "index"]
    bound_ok = order_ok = parity_ok = True
    for _ in range(500):
        toks = list(rng.choice(words, size=rng.integers(1, 10)))
        base = score_sentence(" ".join(toks), lex)
        bound_ok &= abs(base) <= 1.5
        order_ok &= np.isclose(score_sentence(" ".join(rng.permutation(toks)), lex), base,
                               rtol=0, atol=1e-15)
        k = int(rng.integers(0, 4))
        neg = score_sentence(" ".join(["not"] * k + toks), lex)
        parity_ok &= np.isclose(neg, (-1) ** k * base * len(toks) / (len(toks) + k),
                                rtol=0, atol=1e-15)
    pols = [score_sentence("good falls", lex), score_sentence("not good falls", lex), 0.0]
    chain_ok = np.allclose(pols, [0.225, -0.15, 0.0], rtol=0, atol=1e-15)
    record(8, bound_ok and order_ok and parity_ok and chain_ok,
           f"|pol| <= 1.5 {bound_ok}, order invariance {order_ok}, negation parity {parity_ok}, "
           f"hand chain {chain_ok} (daily mean {np.mean(pols):.3f}); "
           "published index values not reproducible (data not distributed)")
