import numpy as np
import pytest

import memsim.kernel as K
from memsim.config import make_config
from memsim.simloop import run
from memsim.suites import hog_and_victims, streaming_mix
from memsim.trace import Trace, TraceRecord


def mise_cfg(seed=0, **over):
    o = {"run_length_cycles": 200_000, "model": "mise", "mise.interval": 100_000, "seed": seed}
    o.update(over)
    return make_config(o, user={"apps": streaming_mix(3)})


def test_deterministic():
    a, b = run(mise_cfg()), run(mise_cfg())
    assert np.array_equal(a.counters, b.counters)
    assert np.array_equal(a.epoch_log, b.epoch_log)
    assert a.estimates == b.estimates


def test_seed_changes_lottery_only():
    a, b = run(mise_cfg(0)), run(mise_cfg(1))
    assert not np.array_equal(a.epoch_log, b.epoch_log)


def test_epoch_and_window_boundaries():
    r = run(mise_cfg())
    assert r.window_ends == [100_000, 200_000]
    assert len(r.epoch_log) == 20
    hpe = r.counters[:, K.HPE_CYCLES]
    assert hpe.sum() == 200_000
    assert sorted(set(hpe.tolist())) == sorted({10_000 * int((r.epoch_log == a).sum())
                                                for a in range(4)})
    assert len(r.estimates) == 2 and len(r.interval_rows) == 8


def test_request_conservation():
    r = run(mise_cfg())
    served, req = r.counters[:, K.SERVED], r.counters[:, K.DRAM_REQ]
    # every LLC miss becomes one DRAM request; those not yet served are in flight
    assert np.array_equal(req, r.counters[:, K.LLC_MISS])
    assert ((req - served) >= 0).all() and ((req - served) <= 8).all()
    assert r.monitors["issues"] == served.sum()
    assert (r.counters[:, K.ROW_HIT] <= served).all()


@pytest.mark.parametrize("policy", ["frfcfs", "frfcfs_cap", "bliss", "grouping"])
def test_monitors_clean(policy):
    cfg = make_config({"run_length_cycles": 150_000, "scheduler.policy": policy},
                      user={"apps": hog_and_victims()})
    m = run(cfg).monitors
    assert m["tccd_violations"] == m["bank_overlap_violations"] == m["cap_violations"] == 0


def test_stop_at_retired_and_truncation():
    tr = Trace.from_records([TraceRecord(5, 64 * k, False) for k in range(100)])
    cfg = make_config({"run_length_cycles": 10 ** 6, "oracle.sample_period": 100},
                      traces=[tr], repeat=True)
    r = run(cfg, stop_at_retired=300)
    assert r.retired[0] >= 300 and r.cycles < 10 ** 6
    cfg = make_config({"run_length_cycles": 10 ** 6, "oracle.sample_period": 100},
                      traces=[tr], repeat=False)
    r = run(cfg, stop_at_retired=10 ** 6, max_cycles=50_000)
    assert "truncated" in r.flags and r.retired[0] == 600


def test_streaks_match_service_log():
    cfg = make_config({"run_length_cycles": 100_000, "service_log": 100_000},
                      user={"apps": hog_and_victims()})
    r = run(cfg)
    served = r.counters[:, K.SERVED]
    assert np.array_equal(r.streak_sum.sum(axis=1), served)
    assert len(r.service_log) == served.sum()
