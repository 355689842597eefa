"""Trace-driven core: instruction window, MSHR-limited memory issue, stall accounting.

The window is a ring of entries, each either a run of compute instructions or
one memory instruction. Entries are addressed by monotone sequence numbers
(``seq % window_size`` is the ring slot). One tick, in order:

1. deliver completions (an in-flight op whose done cycle has arrived)
2. retire up to ``issue_width`` instructions from the head; a memory
   instruction retires only once its access is complete
3. count a memory-stall cycle iff nothing retired and the head is an
   incomplete memory instruction
4. refill the window from the trace
5. issue waiting memory instructions in program order while MSHRs are free
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, NamedTuple

import numpy as np
from numba import njit

from .trace import Trace

KIND_COMPUTE = 0
KIND_MEMORY = 1

OP_WAITING = 0
OP_IN_FLIGHT = 1
OP_DONE = 2

# what an in-flight access turned out to be (for outstanding hit/miss timers)
ACC_L1 = 0
ACC_LLC_HIT = 1
ACC_LLC_MISS = 2

PENDING = 1 << 62

# columns of the per-core scalar table
REC = 0         # next trace record to fetch
GAP_LEFT = 1    # compute instructions of that record not yet fetched (-1: not started)
HEAD = 2        # seq of the oldest window entry
TAIL = 3        # seq one past the youngest entry
ISS = 4         # seq from which to look for the next issuable op
OCC = 5         # window occupancy in instructions
INFLIGHT = 6
RETIRED = 7
TOTAL = 8
STALL = 9
FINISHED = 10
OUT_HITS = 11   # outstanding LLC hits
OUT_MISS = 12   # outstanding LLC misses
T_START = 13    # offset of the core's trace in the shared trace table
T_LEN = 14
T_LOOP = 15     # 1: restart the trace from record 0 when exhausted
N_CS = 16

# window entry fields
W_KIND = 0
W_COUNT = 1
W_ADDR = 2
W_WRITE = 3
W_STATE = 4

# MSHR fields
M_SEQ = 0       # window seq held, -1 if free
M_DONE = 1      # completion cycle (PENDING until known)
M_KIND = 2


@dataclass
class CoreConfig:
    issue_width: int = 3
    window_size: int = 128
    mshr_count: int = 8
    l1_hit_latency_cycles: int = 1

    def problems(self, prefix: str = "core"):
        return [(f"{prefix}.{k}", "must be > 0") for k, v in vars(self).items() if v <= 0]


class CoreArrays(NamedTuple):
    """State for ``n`` cores; ``seq % window_size`` is a sequence number's ring slot."""

    trace: np.ndarray   # [records, 3]: gap, address, is_write (all cores concatenated)
    cs: np.ndarray      # [n, N_CS]
    win: np.ndarray     # [n, W, 5]
    mshr: np.ndarray    # [n, M, 3]

    @property
    def retired(self):
        return self.cs[:, RETIRED]

    @property
    def total(self):
        return self.cs[:, TOTAL]

    @property
    def stall(self):
        return self.cs[:, STALL]

    @property
    def finished(self):
        return self.cs[:, FINISHED]


def make_core_arrays(traces: List[Trace], cfg: CoreConfig, repeat=None) -> CoreArrays:
    n = len(traces)
    total = sum(len(t) for t in traces)
    tr = np.zeros((total, 3), dtype=np.int64)
    cs = np.zeros((n, N_CS), dtype=np.int64)
    off = 0
    for i, t in enumerate(traces):
        k = len(t)
        tr[off:off + k, 0] = t.gap
        tr[off:off + k, 1] = t.address
        tr[off:off + k, 2] = t.is_write
        cs[i, T_START] = off
        cs[i, T_LEN] = k
        off += k
    if repeat is not None:
        cs[:, T_LOOP] = np.asarray(repeat, dtype=np.int64)
    cs[:, GAP_LEFT] = -1
    win = np.zeros((n, cfg.window_size, 5), dtype=np.int64)
    mshr = np.zeros((n, cfg.mshr_count, 3), dtype=np.int64)
    mshr[:, :, M_SEQ] = -1
    mshr[:, :, M_DONE] = PENDING
    c = CoreArrays(tr, cs, win, mshr)
    for i in range(n):
        refill(tr, cs, win, i)
    return c


@njit(cache=True)
def deliver(cs, win, mshr, i, now):
    """Mark every in-flight op whose completion cycle has arrived as done."""
    W = win.shape[1]
    for m in range(mshr.shape[1]):
        seq = mshr[i, m, M_SEQ]
        if seq >= 0 and mshr[i, m, M_DONE] <= now:
            win[i, seq % W, W_STATE] = OP_DONE
            mshr[i, m, M_SEQ] = -1
            mshr[i, m, M_DONE] = PENDING
            cs[i, INFLIGHT] -= 1
            k = mshr[i, m, M_KIND]
            if k == ACC_LLC_HIT:
                cs[i, OUT_HITS] -= 1
            elif k == ACC_LLC_MISS:
                cs[i, OUT_MISS] -= 1


@njit(cache=True)
def retire(cs, win, i, width):
    """Retire up to ``width`` instructions; update cycle and stall counts."""
    W = win.shape[1]
    n = 0
    head = cs[i, HEAD]
    tail = cs[i, TAIL]
    while n < width and head < tail:
        s = head % W
        if win[i, s, W_KIND] == KIND_COMPUTE:
            take = min(width - n, win[i, s, W_COUNT])
            win[i, s, W_COUNT] -= take
            n += take
            if win[i, s, W_COUNT] == 0:
                head += 1
        elif win[i, s, W_STATE] == OP_DONE:
            n += 1
            head += 1
        else:
            break
    cs[i, HEAD] = head
    cs[i, OCC] -= n
    cs[i, RETIRED] += n
    cs[i, TOTAL] += 1
    if n == 0 and head < tail:
        s = head % W
        if win[i, s, W_KIND] == KIND_MEMORY and win[i, s, W_STATE] != OP_DONE:
            cs[i, STALL] += 1
    return n


@njit(cache=True)
def refill(trace, cs, win, i):
    """Fill free window space from the trace; sets FINISHED at trace end."""
    W = win.shape[1]
    tlen = cs[i, T_LEN]
    while cs[i, OCC] < W and cs[i, TAIL] - cs[i, HEAD] < W:
        if cs[i, REC] >= tlen:
            if cs[i, T_LOOP] == 0 or tlen == 0:
                break
            cs[i, REC] = 0
        r = cs[i, T_START] + cs[i, REC]
        if cs[i, GAP_LEFT] < 0:
            cs[i, GAP_LEFT] = trace[r, 0]
        gap = cs[i, GAP_LEFT]
        tail = cs[i, TAIL]
        if gap > 0:
            take = min(gap, W - cs[i, OCC])
            last = (tail - 1) % W
            if tail > cs[i, HEAD] and win[i, last, W_KIND] == KIND_COMPUTE:
                win[i, last, W_COUNT] += take
            else:
                s = tail % W
                win[i, s, W_KIND] = KIND_COMPUTE
                win[i, s, W_COUNT] = take
                cs[i, TAIL] = tail + 1
            cs[i, GAP_LEFT] = gap - take
            cs[i, OCC] += take
        else:
            s = tail % W
            win[i, s, W_KIND] = KIND_MEMORY
            win[i, s, W_COUNT] = 1
            win[i, s, W_ADDR] = trace[r, 1]
            win[i, s, W_WRITE] = trace[r, 2]
            win[i, s, W_STATE] = OP_WAITING
            cs[i, TAIL] = tail + 1
            cs[i, OCC] += 1
            cs[i, REC] += 1
            cs[i, GAP_LEFT] = -1
    if (cs[i, REC] >= tlen and cs[i, HEAD] == cs[i, TAIL]
            and (cs[i, T_LOOP] == 0 or tlen == 0)):
        cs[i, FINISHED] = 1


@njit(cache=True)
def next_issue(cs, win, mshr, i):
    """Window seq of the oldest waiting memory op if an MSHR is free, else -1."""
    if cs[i, INFLIGHT] >= mshr.shape[1]:
        return -1
    W = win.shape[1]
    q = max(cs[i, ISS], cs[i, HEAD])
    tail = cs[i, TAIL]
    while q < tail:
        s = q % W
        if win[i, s, W_KIND] == KIND_MEMORY and win[i, s, W_STATE] == OP_WAITING:
            cs[i, ISS] = q
            return q
        q += 1
    cs[i, ISS] = q
    return -1


@njit(cache=True)
def mark_issued(cs, win, mshr, i, seq, done, kind):
    """Move op ``seq`` in flight on a free MSHR; returns the MSHR index."""
    W = win.shape[1]
    win[i, seq % W, W_STATE] = OP_IN_FLIGHT
    for m in range(mshr.shape[1]):
        if mshr[i, m, M_SEQ] < 0:
            mshr[i, m, M_SEQ] = seq
            mshr[i, m, M_DONE] = done
            mshr[i, m, M_KIND] = kind
            cs[i, INFLIGHT] += 1
            if kind == ACC_LLC_HIT:
                cs[i, OUT_HITS] += 1
            elif kind == ACC_LLC_MISS:
                cs[i, OUT_MISS] += 1
            cs[i, ISS] = seq + 1
            return m
    return -1


class IssuedAccess(NamedTuple):
    handle: int
    address: int
    is_write: bool


class CoreState:
    """One core driven from Python against an external memory.

    ``tick(completed)`` takes the handles of accesses whose responses arrived
    this cycle and returns the accesses newly issued this cycle.
    """

    def __init__(self, trace: Trace, config: CoreConfig = CoreConfig()):
        self.config = config
        self.arrays = make_core_arrays([trace], config)
        self.cycle = 0
        self._mshr_of = {}

    # read-only views of the counters
    retired_instructions = property(lambda self: int(self.arrays.cs[0, RETIRED]))
    total_cycles = property(lambda self: int(self.arrays.cs[0, TOTAL]))
    memory_stall_cycles = property(lambda self: int(self.arrays.cs[0, STALL]))
    finished = property(lambda self: bool(self.arrays.cs[0, FINISHED]))
    window_occupancy = property(lambda self: int(self.arrays.cs[0, OCC]))

    @property
    def in_flight(self) -> set:
        return set(self._mshr_of)

    def tick(self, completed: Iterable[int] = ()) -> List[IssuedAccess]:
        if self.finished:
            raise RuntimeError("core already finished")
        c = self.arrays
        now = self.cycle
        for h in completed:
            if h not in self._mshr_of:
                raise ValueError(f"response for unknown handle {h}")
            c.mshr[0, self._mshr_of.pop(h), M_DONE] = now
        deliver(c.cs, c.win, c.mshr, 0, now)
        retire(c.cs, c.win, 0, self.config.issue_width)
        refill(c.trace, c.cs, c.win, 0)
        issued = []
        W = self.config.window_size
        while len(issued) < self.config.issue_width:
            seq = next_issue(c.cs, c.win, c.mshr, 0)
            if seq < 0:
                break
            m = mark_issued(c.cs, c.win, c.mshr, 0, seq, PENDING, ACC_L1)
            self._mshr_of[int(seq)] = int(m)
            s = seq % W
            issued.append(IssuedAccess(int(seq), int(c.win[0, s, W_ADDR]), bool(c.win[0, s, W_WRITE])))
        self.cycle += 1
        return issued


def compute_alpha(state) -> float:
    """Fraction of cycles stalled on memory (``state`` has the two counters)."""
    total = state.total_cycles
    if total <= 0:
        raise ValueError("no cycles simulated")
    return state.memory_stall_cycles / total


def compute_ipc(state) -> float:
    total = state.total_cycles
    if total <= 0:
        raise ValueError("no cycles simulated")
    return state.retired_instructions / total
