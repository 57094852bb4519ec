import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gamma_posterior_enumeration
from shmbs.inference.samplers import SlabPrior, log_marginal_gamma, sample_gamma


def problem(n=50, beta=(0.3, 0.0, 0.12), seed=0):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n, len(beta)))
    y = Z @ np.asarray(beta) + rng.normal(size=n)
    return Z, y


def config_index(g):
    return int("".join("1" if b else "0" for b in g), 2)


def test_enumeration_oracle_is_nondegenerate():
    Z, y = problem()
    _, probs = gamma_posterior_enumeration(Z, y, 1.0, 0.0, 0.5)
    assert probs.max() < 0.9
    assert np.sum(probs > 0.02) >= 3


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), psi=st.floats(0.05, 10.0), c=st.floats(-0.5, 0.5),
       pi=st.floats(0.05, 0.95))
def test_log_marginal_differences_match_oracle(seed, psi, c, pi):
    Z, y = problem(n=20, seed=seed)
    configs, probs = gamma_posterior_enumeration(Z, y, psi, c, pi)
    prior = SlabPrior.build(Z, 20, psi, c, pi)
    G, P = Z.T @ Z, Z.T @ y
    lm = np.array([log_marginal_gamma(g, G, P, prior) for g in configs])
    w = np.exp(lm - lm.max())
    np.testing.assert_allclose(w / w.sum(), probs, rtol=1e-8, atol=1e-12)


def test_sweeps_match_enumeration():
    Z, y = problem()
    configs, probs = gamma_posterior_enumeration(Z, y, 1.0, 0.0, 0.5)
    prior = SlabPrior.build(Z, 50, 1.0, 0.0, 0.5)
    G, P = Z.T @ Z, Z.T @ y
    rng = np.random.default_rng(11)
    g = np.zeros(3, bool)
    counts = np.zeros(len(configs))
    n_sweeps = 20_000
    for _ in range(n_sweeps):
        g = sample_gamma(g, G, P, prior, rng)
        counts[config_index(g)] += 1
    tv = 0.5 * np.abs(counts / n_sweeps - probs).sum()
    assert tv < 0.02


def test_zero_prior_probability_never_activates(rng):
    Z, y = problem(beta=(2.0, 2.0, 2.0))
    prior = SlabPrior.build(Z, 50, 1.0, 0.0, [0.5, 0.0, 0.5])
    G, P = Z.T @ Z, Z.T @ y
    g = np.ones(3, bool)
    for _ in range(200):
        g = sample_gamma(g, G, P, prior, rng)
        assert not g[1]
    assert g[0] and g[2]


def test_disallowed_bits_stay_off(rng):
    Z, y = problem(beta=(2.0, 2.0, 2.0))
    prior = SlabPrior.build(Z, 50, 1.0, 0.0, 0.5)
    G, P = Z.T @ Z, Z.T @ y
    g = np.ones(3, bool)
    for _ in range(100):
        g = sample_gamma(g, G, P, prior, rng, allowed=[True, True, False])
        assert not g[2]


def test_duplicate_and_null_columns():
    rng = np.random.default_rng(3)
    n = 200
    x = rng.normal(size=n)
    Z = np.column_stack([x, x + 1e-3 * rng.normal(size=n), rng.normal(size=n)])
    y = 0.5 * x + rng.normal(size=n)
    prior = SlabPrior.build(Z, n, 1.0, 0.0, 0.5)
    G, P = Z.T @ Z, Z.T @ y
    g = np.zeros(3, bool)
    keep = []
    for _ in range(3000):
        g = sample_gamma(g, G, P, prior, rng)
        keep.append(g.copy())
    keep = np.array(keep)
    incl = keep.mean(axis=0)
    # the signal is carried by one of the two copies, rarely both
    assert np.mean(keep[:, 0] | keep[:, 1]) > 0.95
    assert np.mean(keep[:, 0] & keep[:, 1]) < 0.5
    assert incl[2] < 0.5
