from types import SimpleNamespace

import numpy as np
import pytest

from shmbs.errors import FlatSpectrum
from shmbs.inference.hyper import estimate_hyperparams, fisher_g_pvalue, fit_ar1, seasonal_period
from shmbs.statespace import StateLayout


def ar1_path(n, D, rho, rng, sd=0.1):
    x = np.empty(n)
    x[0] = D
    for t in range(n - 1):
        x[t + 1] = D + rho * (x[t] - D) + sd * rng.normal()
    return x


def test_fit_ar1_recovers_coefficient(rng):
    D, rho = fit_ar1(ar1_path(500, 0.2, 0.6, rng))
    assert abs(rho - 0.6) < 0.1
    assert abs(D - 0.2) < 0.05


def test_fit_ar1_exact_line():
    x = 1.0 + 0.5 ** np.arange(20)
    D, rho = fit_ar1(x)
    assert rho == pytest.approx(0.5)
    assert D == pytest.approx(1.0)


@pytest.mark.parametrize("period", [4, 5, 7, 12])
def test_pure_pattern_period(period):
    pattern = np.random.default_rng(period).normal(size=period)
    pattern -= pattern.mean()
    x = np.tile(pattern, 400 // period + 1)[:400]
    assert seasonal_period(x) == period


def test_stochastic_seasonal_period(rng):
    # dummy-variable seasonal with small noise
    s, n = 4, 600
    k = np.zeros((n, s - 1))
    k[0] = [1.0, -0.5, 0.2]
    for t in range(n - 1):
        k[t + 1, 0] = -k[t].sum() + 0.05 * rng.normal()
        k[t + 1, 1:] = k[t, :-1]
    assert seasonal_period(k[:, 0]) == 4


def test_white_noise_is_flat(rng):
    with pytest.raises(FlatSpectrum):
        seasonal_period(rng.normal(size=500))


def test_constant_is_flat():
    with pytest.raises(FlatSpectrum):
        seasonal_period(np.ones(100))


def test_g_pvalue_bounds():
    assert fisher_g_pvalue(1.0, 50) == 0.0
    assert fisher_g_pvalue(0.02, 50) == 1.0
    assert fisher_g_pvalue(0.5, 50) == pytest.approx(50 * 0.5**49)


def _fake_draws(rng, rho=0.6, n=400):
    layout = StateLayout(1, (4,), False)
    pattern = np.array([1.0, -0.5, 0.2, -0.7])

    def path():
        a = np.zeros((n, layout.dim))
        a[:, layout.delta[0]] = ar1_path(n, 0.1, rho, rng)
        a[:, layout.kappa[0][0]] = np.tile(pattern, n // 4)
        return a

    draws = np.stack([path() for _ in range(20)])
    return SimpleNamespace(layout=layout, state_mean=draws.mean(axis=0), state_draws=draws)


def test_estimate_hyperparams(rng):
    est = estimate_hyperparams(_fake_draws(rng))
    assert abs(est.rho[0] - 0.6) < 0.05
    assert abs(est.D[0] - 0.1) < 0.02
    assert est.s == (4,)
    assert set(est.to_dict()) == {"D", "rho", "s"}


def test_estimate_hyperparams_mean_path(rng):
    fake = _fake_draws(rng)
    est = estimate_hyperparams(fake, method="mean_path")
    # the average of independent paths has the same AR coefficient
    assert abs(est.rho[0] - 0.6) < 0.1
    with pytest.raises(ValueError):
        estimate_hyperparams(fake, method="bogus")
