import pytest

from memsim.config import make_config
from memsim.core import CoreConfig, CoreState, compute_alpha, compute_ipc
from memsim.simloop import run
from memsim.trace import Trace, TraceRecord


def drive(core, latency):
    """Tick ``core`` to completion against a fixed-latency memory; returns issue log."""
    pending, log, t = {}, [], 0
    while not core.finished:
        done = [h for h, d in pending.items() if d == t]
        for h in done:
            del pending[h]
        for a in core.tick(done):
            pending[a.handle] = t + latency
            log.append((t, a.handle))
        t += 1
    return log


def test_single_miss_stalls_for_latency():
    c = CoreState(Trace.from_records([TraceRecord(0, 0x1000, False)]))
    drive(c, 10)
    assert c.memory_stall_cycles == 10
    assert c.total_cycles == 11
    assert c.retired_instructions == 1


def test_pure_compute_full_width():
    c = CoreState(Trace.from_records([TraceRecord(300, 0x0, False)]))
    for _ in range(100):
        c.tick()
    assert c.retired_instructions == 300
    assert compute_ipc(c) == 3.0
    assert compute_alpha(c) == 0.0


def test_mshr_gating():
    c = CoreState(Trace.from_records([TraceRecord(0, 0, False), TraceRecord(0, 64, False)]),
                  CoreConfig(mshr_count=1))
    log = drive(c, 10)
    # the second access waits for the first response
    assert log == [(0, 0), (10, 1)]


def test_issue_limited_by_mshrs_and_width():
    recs = [TraceRecord(0, 64 * k, False) for k in range(20)]
    c = CoreState(Trace.from_records(recs), CoreConfig(mshr_count=8))
    assert len(c.tick()) == 3
    assert len(c.tick()) == 3
    assert len(c.tick()) == 2
    assert c.tick() == []
    assert len(c.in_flight) == 8


def test_unknown_handle_rejected():
    c = CoreState(Trace.from_records([TraceRecord(0, 0, False)]))
    c.tick()
    with pytest.raises(ValueError):
        c.tick([99])


def test_window_bound_and_counters():
    recs = [TraceRecord(5, 64 * k, k % 3 == 0) for k in range(200)]
    c = CoreState(Trace.from_records(recs))
    pending, t = {}, 0
    while not c.finished:
        done = [h for h, d in pending.items() if d == t]
        for h in done:
            del pending[h]
        before = c.retired_instructions
        for a in c.tick(done):
            pending[a.handle] = t + 37
        assert 0 <= c.retired_instructions - before <= 3
        assert c.window_occupancy <= 128
        assert len(c.in_flight) <= 8
        assert c.memory_stall_cycles <= c.total_cycles
        t += 1
    assert c.retired_instructions == 200 * 6


def test_alpha_and_ipc_ratios():
    class S:
        def __init__(self, r, st, tot):
            self.retired_instructions, self.memory_stall_cycles, self.total_cycles = r, st, tot
    assert compute_alpha(S(0, 0, 1000)) == 0.0
    assert compute_alpha(S(0, 1000, 1000)) == 1.0
    assert compute_alpha(S(0, 250, 1000)) == 0.25
    assert compute_ipc(S(300, 0, 100)) == 3.0
    assert compute_ipc(S(0, 0, 10)) == 0.0
    with pytest.raises(ValueError):
        compute_ipc(S(0, 0, 0))


def test_full_system_hand_trace():
    # 10 records, gap 2, all in one DRAM row of bank 0. Each access misses L1
    # and LLC and is ready at the controller 21 cycles after issue. The first
    # opens the row (20 cycles: issue 22, done 42); the other nine are row
    # hits serialized on the bank at 12 cycles each, so the last completes at
    # 150. Retirement happens on cycle 1 (two compute instrs) and on each of
    # the ten completion cycles; every other cycle stalls on memory.
    tr = Trace.from_records([TraceRecord(2, 64 * k, False) for k in range(10)])
    cfg = make_config({"run_length_cycles": 300, "service_log": 100}, traces=[tr], repeat=False)
    r = run(cfg)
    assert r.retired.tolist() == [30]
    assert r.total_cycles.tolist() == [150]
    assert r.stall_cycles.tolist() == [139]
    assert r.ipc[0] == pytest.approx(0.2)
    log = r.service_log
    assert log[:, 0].tolist() == [22, 42, 54, 66, 78, 90, 102, 114, 126, 138]
    assert log[:, 5].tolist() == [42, 54, 66, 78, 90, 102, 114, 126, 138, 150]
