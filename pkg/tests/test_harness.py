import json

import numpy as np
import pytest

from shmbs.config import McmcSpec, ModelSpec
from shmbs.errors import InsufficientHistory, LengthMismatch
from shmbs.harness.backtest import BacktestData, rolling_backtest, window_spans
from shmbs.harness.cli import main
from shmbs.harness.metrics import exp_transform, mse, mspe
from shmbs.harness.predict import ArGarchModel, PlugInModel
from shmbs.inference.mcmc import RegimeInputs, run_mcmc
from shmbs.simulate import SimConfig, simulate_dataset
from shmbs.statespace import MbsComponents, StateLayout

# -- metrics ----------------------------------------------------------------------


def test_mse_arithmetic():
    assert mse([1.0, 2.0], [0.9, 2.1]) == pytest.approx([0.01])
    np.testing.assert_allclose(mspe(np.ones((3, 2)), np.ones((3, 2))), [0.0, 0.0])


def test_exp_transform():
    assert exp_transform(0.0) == 1.0
    v = np.array([0.001147, 0.0002])
    np.testing.assert_array_equal(exp_transform(v), np.exp(v * 1000))
    assert exp_transform(10.0) == np.inf


def test_metric_length_mismatch():
    with pytest.raises(LengthMismatch):
        mse([1.0, 2.0], [1.0])
    with pytest.raises(LengthMismatch):
        mspe([], [])


# -- plug-in predictor --------------------------------------------------------------


def plug_in(m, beta, rho=0.5, D=0.0, s_u=0.0, s_v=0.0, s_w=0.0, s_eps=1e-8, thresholds=None,
            regime_type="none"):
    spec = ModelSpec(m=m, regime_type=regime_type)
    layout = StateLayout(m, spec.seasonal_periods, False)
    eye = np.eye(m)
    comps = MbsComponents(np.full(m, D), np.full(m, rho), s_u * eye, s_v * eye, s_w * eye,
                          s_eps * eye)
    return PlugInModel(spec, layout, comps, np.asarray(beta, float), thresholds)


def test_zero_model_predicts_zero():
    model = plug_in(2, np.zeros((2, 1, 3)), s_eps=1.0)
    y = np.zeros((20, 2))
    path = model.one_step_path(y, RegimeInputs(np.zeros((20, 2))))
    assert path.shape == (21, 2)
    assert np.all(np.isnan(path[:3]))
    np.testing.assert_allclose(path[3:], 0.0, atol=1e-10)


def test_trend_advances_by_slope():
    D = 0.1
    model = plug_in(1, np.zeros((1, 1, 3)), rho=0.5, D=D)
    y = (2.0 + D * np.arange(30))[:, None]
    path = model.one_step_path(y, RegimeInputs(np.zeros((30, 1))))
    np.testing.assert_allclose(path[-1], y[-1] + D, atol=1e-6)
    np.testing.assert_allclose(path[15:30], y[15:30], atol=1e-6)


def test_predictor_needs_lags():
    model = plug_in(1, np.zeros((1, 1, 3)))
    with pytest.raises(InsufficientHistory):
        model.one_step_path(np.zeros((3, 1)), RegimeInputs(np.zeros((3, 1))))


def test_ar_comparator_matches_least_squares(rng):
    n = 200
    y = np.zeros((n, 2))
    for t in range(1, n):
        y[t] = 0.1 + np.array([0.5, -0.3]) * y[t - 1] + rng.normal(size=2)
    model = ArGarchModel.fit(y, 1)
    path = model.one_step_path(y)
    for i in range(2):
        slope, icept = np.polyfit(y[:-1, i], y[1:, i], 1)
        assert path[-1, i] == pytest.approx(icept + slope * y[-1, i], rel=1e-9)
        np.testing.assert_allclose(path[1:n, i], icept + slope * y[:-1, i], rtol=1e-9)


@pytest.mark.slow
def test_true_parameters_predict_better():
    cfg = SimConfig(n=300, sigma2_driver=0.25)
    rows = []
    for rep in range(10):
        ds = simulate_dataset(cfg, np.random.default_rng(100 + rep))
        y, x = ds.y.values, ds.x.values
        inputs = RegimeInputs(x, x, None)
        spec = ModelSpec(m=3, mcmc=McmcSpec(n_iter=150, burn_in=50))
        split = 250
        draws = run_mcmc(spec, y[:split], RegimeInputs(x[:split], x[:split]),
                         np.random.default_rng(rep))
        fitted = PlugInModel.from_draws(draws).one_step_path(y, inputs)[split:300]
        eye = np.eye(3)
        comps = MbsComponents(np.zeros(3), np.array(cfg.rho), 0.02 * eye, 0.05 * eye,
                              0.02 * eye, 0.55 * eye)
        beta = np.broadcast_to(np.asarray(cfg.beta, float), (3, 2, 3))
        true = PlugInModel(spec, draws.layout, comps, beta, ds.thresholds)
        oracle = true.one_step_path(y, inputs)[split:300]
        rows.append((mspe(y[split:], oracle).mean(), mspe(y[split:], fitted).mean()))
    rows = np.array(rows)
    assert rows[:, 0].mean() <= rows[:, 1].mean()


# -- rolling protocol ---------------------------------------------------------------


def test_window_counts():
    spans = window_spans(1260)
    assert len(spans) == 16
    assert sum(stop - split for _, split, stop in spans) == 16 * 63
    tests = [(split, stop) for _, split, stop in spans]
    assert all(a[1] == b[0] for a, b in zip(tests, tests[1:]))
    assert spans[-1][2] == 1260
    assert window_spans(315) == [(0, 252, 315)]
    with pytest.raises(InsufficientHistory):
        window_spans(314)


@pytest.fixture(scope="module")
def small_backtest_data():
    ds = simulate_dataset(SimConfig(n=160, sigma2_driver=0.25), np.random.default_rng(3))
    return BacktestData(ds.y, ds.x.values)


def test_rolling_backtest_small(small_backtest_data, tmp_path):
    spec = ModelSpec(m=3, mcmc=McmcSpec(n_iter=20, burn_in=5))
    report = rolling_backtest(spec, small_backtest_data, window=100, step=20, seed=1)
    assert report.n_windows == 3
    assert report.models == ["type_I", "no_regime", "ar_garch"]
    assert len(report.predictions) == 3 * 3 * 20 * 3
    agg = report.aggregate()
    for name in report.models:
        raw = report.metric_table("mspe")[name]
        np.testing.assert_array_equal(agg[name]["exp_mspe"], exp_transform(raw).mean(axis=0))
    report.write(tmp_path / "a")
    again = rolling_backtest(spec, small_backtest_data, window=100, step=20, seed=1)
    again.write(tmp_path / "b")
    for name in ("report.json", "metrics.csv", "predictions.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert json.loads((tmp_path / "a" / "report.json").read_text())["n_windows"] == 3


def test_backtest_degarch_per_window(small_backtest_data):
    d = small_backtest_data
    data = BacktestData(d.y, d.hard, degarch=True)
    spec = ModelSpec(m=3, mcmc=McmcSpec(n_iter=10, burn_in=2))
    report = rolling_backtest(spec, data, window=100, step=30, seed=0, models={"none": spec.replace(
        regime_type="none")})
    assert report.n_windows == 2
    g0 = report.per_window[0]["preprocessing"]["garch"]
    g1 = report.per_window[1]["preprocessing"]["garch"]
    assert len(g0) == 3 and g0 != g1


# -- CLI ------------------------------------------------------------------------------


def write(path, text):
    path.write_text(text)
    return path


def test_cli_missing_config_exit_2(tmp_path):
    assert main(["fit", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_bad_key_exit_2(tmp_path):
    cfg = write(tmp_path / "bad.cfg", "m = 3\nbogus = 1\n")
    assert main(["fit", "--config", str(cfg)]) == 2


def test_cli_unknown_subcommand_exit_2():
    assert main(["explode"]) == 2


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("sim")
    cfg = write(base / "sim.cfg", "n = 180\nsigma2_driver = 0.25\n")
    assert main(["simulate", "--config", str(cfg), "--seed", "7", "--out", str(base / "a")]) == 0
    return base


def test_cli_simulate_deterministic(sim_dir):
    cfg = sim_dir / "sim.cfg"
    assert main(["simulate", "--config", str(cfg), "--seed", "7", "--out", str(sim_dir / "b")]) == 0
    for name in ("x.csv", "y.csv", "regimes.csv", "truth.csv", "simulation.json"):
        assert (sim_dir / "a" / name).read_bytes() == (sim_dir / "b" / name).read_bytes()
    header = (sim_dir / "a" / "y.csv").read_text().splitlines()[0]
    assert header == "date,y1,y2,y3"


def test_cli_fit(sim_dir, tmp_path):
    cfg = write(sim_dir / "fit.cfg",
                "m = 3\ny = a/y.csv\nhard = a/x.csv\nn_iter = 15\nburn_in = 5\n")
    assert main(["fit", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["n_iter"] == 15
    assert (tmp_path / "draws.csv").read_text().startswith("iter,name,value\n")


def test_cli_backtest(sim_dir, tmp_path):
    cfg = write(sim_dir / "bt.cfg",
                "m = 3\ny = a/y.csv\nhard = a/x.csv\nn_iter = 10\nburn_in = 2\n"
                "window = 120\nstep = 30\nmodels = regime, ar_garch\n")
    assert main(["backtest", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["n_windows"] == 2
    assert report["models"] == ["type_I", "ar_garch"]
    assert report["note"] == "n_iter=10, burn_in=2"


def test_cli_runtime_error_exit_1(sim_dir, tmp_path):
    cfg = write(sim_dir / "short.cfg",
                "m = 3\ny = a/y.csv\nhard = a/x.csv\nwindow = 400\nstep = 63\n")
    assert main(["backtest", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_cli_zones(tmp_path):
    cfg = write(tmp_path / "z.cfg", "size = 10\ntypes = I, IV\n")
    assert main(["zones", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "zones.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 100
