import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memsim.config import make_config
from memsim.metrics import (SlowdownRecord, StreakHistogram, _cycles_at, estimation_error,
                            harmonic_speedup, maximum_slowdown, streak_histogram,
                            weighted_speedup)
from memsim.report import execute
from memsim.suites import hog_and_victims


def rec(sd, est=None, app=0):
    return SlowdownRecord.make(app, 0, 1.0, 1.0 / sd, est)


def test_error_examples():
    assert estimation_error(rec(2.0, 2.2)) == pytest.approx(10.0)
    assert estimation_error(rec(2.0, 2.0)) == 0.0
    assert estimation_error(rec(2.0, 1.0)) == pytest.approx(50.0)
    assert rec(2.0, 2.2).error_percent == pytest.approx(10.0)
    assert rec(2.0).error_percent is None


def test_speedups():
    assert weighted_speedup([rec(2.0), rec(2.0)]) == pytest.approx(1.0)
    assert weighted_speedup([rec(1.0)] * 4) == 4.0
    a, b = [rec(2.0), rec(4.0)], [rec(1.0)]
    assert weighted_speedup(a + b) == pytest.approx(weighted_speedup(a) + weighted_speedup(b))
    assert harmonic_speedup([rec(2), rec(2)]) == 0.5
    assert harmonic_speedup([rec(1)] * 3) == 1.0
    assert harmonic_speedup([rec(1), rec(3)]) == 0.5


def test_max_slowdown():
    rs = [rec(1.2), rec(3.4)]
    assert maximum_slowdown(rs) == pytest.approx(3.4)
    assert maximum_slowdown(rs[::-1]) == maximum_slowdown(rs)
    assert maximum_slowdown([rec(1.5)]) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        maximum_slowdown([])


def test_streak_examples():
    h = streak_histogram([0, 0, 1])
    assert h.counts == {0: {2: 1}, 1: {1: 1}}
    h = streak_histogram([0] * 20)
    assert h.counts == {0: {16: 1}} and h.totals == {0: {16: 20}}
    assert h.mean_length(0) == 20.0 and h.mean_length(5) == 0.0


def test_streaks_tracked_per_channel():
    # interleaved channels do not break each other's runs
    h = streak_histogram([(0, 0), (1, 1), (0, 0), (1, 1)])
    assert h.counts == {0: {2: 1}, 1: {2: 1}}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=200))
def test_streak_conservation(log):
    h = streak_histogram(log)
    for a in range(4):
        assert h.served(a) == log.count(a)
    # number of runs equals the number of app changes plus one
    runs = sum(1 for i, x in enumerate(log) if i == 0 or log[i - 1] != x)
    assert sum(sum(c.values()) for c in h.counts.values()) == runs


def test_histogram_from_arrays():
    hist = np.zeros((2, 17), dtype=np.int64)
    sums = np.zeros_like(hist)
    hist[0, 3], sums[0, 3] = 2, 6
    h = StreakHistogram.from_arrays(hist, sums)
    assert h.mean_length(0) == 3.0 and h.counts[1] == {}


def test_cycles_interpolation():
    c = np.array([0, 100, 200])
    r = np.array([0.0, 50.0, 150.0])
    assert _cycles_at(c, r, 50) == 100
    assert _cycles_at(c, r, 100) == 150
    assert _cycles_at(c, r, 151) is None


def oracle_run(apps, cycles=600_000):
    cfg = make_config({"run_length_cycles": cycles},
                      user={"apps": apps, "oracle": {"window_cycles": 200_000}})
    return execute(cfg, oracle=True)


def test_single_app_actual_is_exactly_one():
    exp = oracle_run([{"synthetic": {"compute_gap": 3}}])
    assert exp.records and all(r.actual_slowdown == 1.0 for r in exp.records)


def test_pure_compute_app_unslowed():
    exp = oracle_run([{"synthetic": {"compute_gap": 0}},
                      {"synthetic": {"compute_gap": 10 ** 8, "record_count": 1}}])
    b = [r for r in exp.totals if r.app == 1][0]
    assert b.actual_slowdown == pytest.approx(1.0, abs=0.01)


def test_victim_slowed_by_hog():
    exp = oracle_run(hog_and_victims(1))
    assert [r for r in exp.totals if r.app == 1][0].actual_slowdown > 1.0
