import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shmbs.errors import MisalignedIndex
from shmbs.regime import (
    HYSTERESIS,
    RegimeThresholds,
    aggregate,
    classify_zone,
    indicator_path,
    regime_path,
    thresholds_from_quantiles,
    write_zone_csv,
    zone_grid,
)

THR = RegimeThresholds([-0.5], [0.5], [-0.3], [0.4])


def test_type1_hand_trace():
    r = np.array([-1.0, 0.0, 1.0, 0.0, -1.0])
    path = indicator_path("I", r, None, RegimeThresholds([-0.5], [0.5]), init=0)
    np.testing.assert_array_equal(path[:, 0], [0, 1, 1, 0, 0])


def test_type1_tar_reduction(rng):
    r = rng.standard_normal(500)
    tau = 0.1
    path = indicator_path("I", r, None, RegimeThresholds([tau], [tau]), init=0)[:, 0]
    np.testing.assert_array_equal(path[1:], (r[:-1] < tau).astype(int))


def test_type4_ignores_hard(rng):
    d = rng.standard_normal((50, 1))
    r = rng.standard_normal((50, 1))
    a = indicator_path("IV", r, d, THR)
    b = indicator_path("IV", rng.permutation(r), d, THR)
    c = indicator_path("IV", None, d, THR)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_zone_examples():
    assert classify_zone("III", -0.6, 0.3, -0.5, 0.5, -0.3, 0.4) == 1
    assert classify_zone("II", -0.6, 0.5, -0.5, 0.5, -0.3, 0.4) == HYSTERESIS
    assert classify_zone("I", 0.5, None, -0.5, 0.5) == HYSTERESIS
    assert classify_zone("I", -0.5, None, -0.5, 0.5) == HYSTERESIS
    # Type IV: "<=" for regime 1, ">" for regime 0
    assert classify_zone("IV", 0.0, -0.3, -0.5, 0.5, -0.3, 0.4) == 1
    assert classify_zone("IV", 0.0, 0.4, -0.5, 0.5, -0.3, 0.4) == HYSTERESIS
    # Type III boundaries are inclusive on the regime-1 side
    assert classify_zone("III", -0.5, 0.4, -0.5, 0.5, -0.3, 0.4) == 1


def test_type2_uses_upper_soft_threshold():
    # low hard signal with soft score between the soft thresholds still gives regime 1
    assert classify_zone("II", -1.0, 0.0, -0.5, 0.5, -0.3, 0.4) == 1
    assert classify_zone("II", 1.0, 0.0, -0.5, 0.5, -0.3, 0.4) == 0


def _grid(rtype):
    return zone_grid(rtype, THR, 0, 100)[2]


def test_zone_nesting():
    z1, z2, z3 = _grid("I"), _grid("II"), _grid("III")
    assert np.all((z1 == HYSTERESIS) <= (z2 == HYSTERESIS))
    assert np.all((z2 == 1) <= (z3 == 1))
    assert np.all((z2 == 0) <= (z3 == 0))
    assert (z2 == HYSTERESIS).sum() > (z1 == HYSTERESIS).sum()


def test_aggregate_examples():
    k = 2 / 3
    assert aggregate(np.array([[1, 1, 0]]), k)[0] == 1
    assert aggregate(np.array([[1, 0, 0]]), k, init=1)[0] == 0
    for kk in (0.5, 2 / 3, 1.0):
        assert aggregate(np.zeros((1, 3), int), kk, init=1)[0] == 0


def test_aggregate_kstar_one_hand_trace():
    per = np.array([[0, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1], [0, 0, 0], [0, 1, 1]])
    np.testing.assert_array_equal(aggregate(per, 1.0, init=0), [0, 0, 1, 1, 0, 0])


def test_aggregate_tie_prefers_regime1():
    per = np.array([[1, 0], [0, 1]])
    np.testing.assert_array_equal(aggregate(per, 0.5, init=0), [1, 1])


@settings(max_examples=40, deadline=None)
@given(arrays(np.int64, st.integers(1, 40), elements=st.integers(0, 1)),
       st.floats(0.5, 1.0), st.integers(0, 1))
def test_aggregate_single_asset_identity(col, k, init):
    np.testing.assert_array_equal(aggregate(col[:, None], k, init), col)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.integers(2, 60), elements=st.floats(-3, 3)),
       st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_wider_band_more_carry_over(r, w1, w2):
    narrow, wide = sorted((w1, w2))

    def carries(w):
        z = classify_zone("I", r, None, -w, w)
        return int(np.sum(z == HYSTERESIS))

    assert carries(wide) >= carries(narrow)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (30, 2), elements=st.floats(-3, 3)), st.integers(0, 1))
def test_paths_are_binary_and_deterministic(r, init):
    thr = RegimeThresholds([-0.2, -0.1], [0.3, 0.1])
    a = regime_path("I", r, None, thr, 2 / 3, init)
    b = regime_path("I", r, None, thr, 2 / 3, init)
    assert set(np.unique(a.per_asset)) <= {0, 1}
    assert a.per_asset[0].tolist() == [init, init]
    np.testing.assert_array_equal(a.global_, b.global_)


def test_misaligned_soft():
    with pytest.raises(MisalignedIndex):
        indicator_path("II", np.zeros((5, 1)), np.zeros((4, 1)), THR)
    with pytest.raises(MisalignedIndex):
        indicator_path("II", np.zeros((5, 1)), None, THR)


def test_threshold_ordering():
    with pytest.raises(ValueError):
        RegimeThresholds([0.5], [-0.5])


def test_thresholds_from_quantiles(rng):
    h = rng.standard_normal((400, 2))
    s = rng.standard_normal((400, 2))
    thr = thresholds_from_quantiles(h, s, (0.3, 0.7, 0.2, 0.9))
    np.testing.assert_allclose(thr.tau_h_L, np.quantile(h, 0.3, axis=0))
    np.testing.assert_allclose(thr.tau_s_U, np.quantile(s, 0.9, axis=0))


def test_zone_csv(tmp_path):
    grids = {t: zone_grid(t, THR, 0, 10) for t in ("I", "II", "III", "IV")}
    f = tmp_path / "zones.csv"
    write_zone_csv(f, grids)
    lines = f.read_text().splitlines()
    assert lines[0] == "type,r_tilde,d,zone"
    assert len(lines) == 1 + 4 * 100
    assert {ln.split(",")[3] for ln in lines[1:]} <= {"regime1", "regime0", "hysteresis"}
