"""Compiled cycle loop.

State lives in a few packed integer tables (see the field constants here and
in ``core``/``sched``) grouped into four tuples plus a small globals vector
and an all-integer parameter tuple. ``advance`` runs whole cycles and pauses
right after the core ticks of the ``stop`` cycle, so the caller can process
boundary events before that cycle's scheduling step. Per cycle:

1-3. for each core in id order: deliver completions, retire, refill, issue
     (L1 -> LLC/ATS -> controller queue)
4.   (caller) boundary events; BLISS clearing runs here too
5.   per channel: select and issue one request if tCCD allows
6.   model counters: interference/queueing cycles, outstanding hit/miss time

The loop is one function working on local arrays: numba reference-counts
every tuple field access, which dominates runtime if done per cycle.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numba import njit

from .cache import ats_lookup, lookup_fill
from .core import (ACC_L1, ACC_LLC_HIT, ACC_LLC_MISS, FINISHED, OUT_HITS, OUT_MISS, PENDING,
                   M_DONE, W_ADDR, deliver, mark_issued, next_issue, refill, retire)
from .dram import decompose, service
from .sched import (B_ACT, B_BUSY, B_CAP_APP, B_CAP_CNT, B_MON_END, B_OPEN, BLISS, C_LAST,
                    C_MON_LAST, C_QLEN, C_STK_LAST, C_STK_LEN, FRFCFS_CAP, NQ, Q_APP, Q_BANK,
                    Q_CORE, Q_MSHR, Q_READY, Q_ROW, Q_SEQ, bliss_update, cap_update, new_banks,
                    new_channels, select)

# per-app cumulative counters (columns of ctr)
SERVED = 0          # requests issued by the controller
HPE_SERVED = 1      # ... while the app held epoch priority
INTERF = 2          # interference / queueing cycles during own epochs
LLC_ACC = 3
LLC_HIT = 4
LLC_MISS = 5
HIT_TIME = 6        # cycles with >= 1 outstanding LLC hit
MISS_TIME = 7       # cycles with >= 1 outstanding LLC miss
EP_HIT = 8
EP_MISS = 9
EP_HIT_TIME = 10
EP_MISS_TIME = 11
EP_ATS_ACC = 12     # sampled ATS accesses during own epochs
EP_ATS_HIT = 13
DRAM_REQ = 14
ROW_HIT = 15
L1_ACC = 16
L1_HIT = 17
BLACKLISTED = 18
LAT_SUM = 19        # sum over served requests of completion - arrival
HPE_CYCLES = 20     # cycles the app held epoch priority
N_CTR = 21

# monitor slots
MON_TCCD = 0
MON_OVERLAP = 1
MON_CAP = 2
MON_ISSUES = 3
MON_QUEUE_PEAK = 4
N_MON = 5

# globals vector
G_CYC = 0
G_PHASE = 1         # 1: the scheduling step of cycle G_CYC is still pending
G_SEQ = 2
G_PRIO = 3          # epoch priority app or -1
G_LAST_APP = 4      # app of the most recent issue on any channel
G_BL_CLEAR = 5      # cycle of the last BLISS clearing
G_LOG_N = 6
G_PART = 7          # 1: LLC way partitioning active
N_G = 8

STREAK_BUCKETS = 16


class Params(NamedTuple):
    n_apps: int
    width: int
    window: int
    mshr: int
    l1_lat: int
    l1_sets: int
    has_llc: int
    llc_shared: int
    llc_sets: int
    llc_lat: int
    channels: int
    ranks: int
    banks: int
    cols: int
    il_kind: int
    stripe: int
    tRCD: int
    tRP: int
    tCL: int
    tCCD: int
    tRAS: int
    burst: int
    policy: int
    overlay: int
    bliss_thr: int
    bliss_clear: int
    cap: int
    use_ats: int
    app_shift: int


class Caches(NamedTuple):
    l1_tag: np.ndarray
    l1_owner: np.ndarray
    l1_stamp: np.ndarray
    l1_clock: np.ndarray
    ll_tag: np.ndarray
    ll_owner: np.ndarray
    ll_stamp: np.ndarray
    ll_clock: np.ndarray
    quota: np.ndarray
    ats_tag: np.ndarray
    ats_stamp: np.ndarray
    ats_clock: np.ndarray
    samp_map: np.ndarray


class Ctrl(NamedTuple):
    qd: np.ndarray          # [ch, capacity, NQ]
    bk: np.ndarray          # [ch, banks, NB]
    chs: np.ndarray         # [ch, NCH]
    blacklist: np.ndarray   # [ch, apps]
    low_int: np.ndarray     # [apps]


class Stats(NamedTuple):
    ctr: np.ndarray         # [apps, N_CTR]
    ats_hist: np.ndarray    # [apps, ways + 1], index 0 counts misses
    stk_hist: np.ndarray    # [apps, STREAK_BUCKETS + 1]
    stk_sum: np.ndarray
    mon: np.ndarray
    log: np.ndarray         # [capacity, 6]: cycle, channel, bank, app, outcome, completion


def make_caches(n, l1_sets, l1_ways, llc_caches, llc_sets, llc_ways, samp_map, use_ats):
    i64 = np.int64
    n_samp = int((samp_map >= 0).sum()) if use_ats else 1
    aw = llc_ways if use_ats else 1
    return Caches(
        np.full((n, l1_sets, l1_ways), -1, i64), np.full((n, l1_sets, l1_ways), -1, i64),
        np.zeros((n, l1_sets, l1_ways), i64), np.zeros(n, i64),
        np.full((llc_caches, llc_sets, llc_ways), -1, i64),
        np.full((llc_caches, llc_sets, llc_ways), -1, i64),
        np.zeros((llc_caches, llc_sets, llc_ways), i64), np.zeros(llc_caches, i64),
        np.zeros(max(n, 1), i64),
        np.full((n, n_samp, aw), -1, i64), np.zeros((n, n_samp, aw), i64), np.zeros(n, i64),
        samp_map.astype(i64) if use_ats else np.full(llc_sets, -1, i64),
    )


def make_ctrl(n, channels, banks, capacity):
    return Ctrl(np.zeros((channels, capacity, NQ), np.int64), new_banks(channels, banks),
                new_channels(channels), np.zeros((channels, n), np.int64),
                np.zeros(n, np.int64))


def make_stats(n, llc_ways, log_capacity):
    i64 = np.int64
    return Stats(np.zeros((n, N_CTR), i64), np.zeros((n, llc_ways + 1), i64),
                 np.zeros((n, STREAK_BUCKETS + 1), i64), np.zeros((n, STREAK_BUCKETS + 1), i64),
                 np.zeros(N_MON, i64), np.zeros((max(log_capacity, 1), 6), i64))


def make_globals():
    g = np.zeros(N_G, np.int64)
    g[G_PHASE] = 1
    g[G_PRIO] = -1
    g[G_LAST_APP] = -1
    return g


@njit(cache=True)
def _flush_streak(chs, stk_hist, stk_sum, ch):
    a = chs[ch, C_STK_LAST]
    L = chs[ch, C_STK_LEN]
    if a >= 0 and L > 0:
        b = L if L < STREAK_BUCKETS else STREAK_BUCKETS
        stk_hist[a, b] += 1
        stk_sum[a, b] += L
    chs[ch, C_STK_LEN] = 0


def flush_streaks(q: Ctrl, s: Stats) -> None:
    for ch in range(q.chs.shape[0]):
        _flush_streak(q.chs, s.stk_hist, s.stk_sum, ch)
        q.chs[ch, C_STK_LAST] = -1


@njit(cache=True)
def _prio_waiting(qd, bk, chs, pa, now):
    # a waiting request behind the app's own in-flight service on the same bank
    # would wait alone too, so it does not count
    for ch in range(chs.shape[0]):
        for k in range(chs[ch, C_QLEN]):
            if qd[ch, k, Q_APP] == pa and qd[ch, k, Q_READY] <= now:
                b = qd[ch, k, Q_BANK]
                if bk[ch, b, B_BUSY] <= now or bk[ch, b, B_CAP_APP] != pa:
                    return True
    return False


@njit(cache=True)
def _other_issuable_on_bank(qd, chs, ch, bank, app, now):
    for k in range(chs[ch, C_QLEN]):
        if qd[ch, k, Q_BANK] == bank and qd[ch, k, Q_APP] != app and qd[ch, k, Q_READY] <= now:
            return True
    return False


@njit(cache=True)
def _loop(trace, cs, win, mshr, l1t, l1o, l1s, l1c, llt, llo, lls, llc, quota, atst, atss, atsc,
          smap, qd, bk, chs, bl, low, ctr, atsh, stk_hist, stk_sum, mon, log, g, p, stop):
    n = p.n_apps
    logcap = log.shape[0] if log.shape[0] > 1 else 0
    while g[G_CYC] < stop:
        now = g[G_CYC]
        if g[G_PHASE] == 1:
            # ---- step 5: scheduling
            if p.policy == BLISS and now - g[G_BL_CLEAR] >= p.bliss_clear:
                bl[:, :] = 0
                g[G_BL_CLEAR] = now
            prio = g[G_PRIO] if p.overlay == 1 else -1
            for ch in range(p.channels):
                qlen = chs[ch, C_QLEN]
                if qlen == 0 or now - chs[ch, C_LAST] < p.tCCD:
                    continue
                k = select(qd, ch, qlen, bk, now, p.policy, prio, bl, low, p.cap)
                if k < 0:
                    continue
                app = qd[ch, k, Q_APP]
                b = qd[ch, k, Q_BANK]
                row = qd[ch, k, Q_ROW]
                hit = bk[ch, b, B_OPEN] == row
                # monitors keep their own bookkeeping, independent of selection
                if now - chs[ch, C_MON_LAST] < p.tCCD:
                    mon[MON_TCCD] += 1
                if now < bk[ch, b, B_MON_END]:
                    mon[MON_OVERLAP] += 1
                if (p.policy == FRFCFS_CAP and hit and bk[ch, b, B_CAP_APP] == app
                        and bk[ch, b, B_CAP_CNT] >= p.cap and prio < 0):
                    if _other_issuable_on_bank(qd, chs, ch, b, app, now):
                        mon[MON_CAP] += 1
                done, outcome, act = service(bk[ch, b, B_OPEN], bk[ch, b, B_ACT], row, now,
                                             p.tRCD, p.tRP, p.tCL, p.tRAS, p.burst)
                bk[ch, b, B_OPEN] = row
                bk[ch, b, B_BUSY] = done
                bk[ch, b, B_ACT] = act
                bk[ch, b, B_MON_END] = done
                chs[ch, C_LAST] = now
                chs[ch, C_MON_LAST] = now
                mon[MON_ISSUES] += 1
                mshr[qd[ch, k, Q_CORE], qd[ch, k, Q_MSHR], M_DONE] = done
                ctr[app, SERVED] += 1
                ctr[app, LAT_SUM] += done - qd[ch, k, Q_READY]
                if g[G_PRIO] == app:
                    ctr[app, HPE_SERVED] += 1
                if outcome == 0:
                    ctr[app, ROW_HIT] += 1
                if p.policy == BLISS:
                    if bliss_update(chs, bl, ch, app, p.bliss_thr):
                        ctr[app, BLACKLISTED] += 1
                cap_update(bk, ch, b, app, outcome == 0)
                g[G_LAST_APP] = app
                if chs[ch, C_STK_LAST] == app:
                    chs[ch, C_STK_LEN] += 1
                else:
                    _flush_streak(chs, stk_hist, stk_sum, ch)
                    chs[ch, C_STK_LAST] = app
                    chs[ch, C_STK_LEN] = 1
                if logcap > 0 and g[G_LOG_N] < logcap:
                    r = g[G_LOG_N]
                    log[r, 0] = now
                    log[r, 1] = ch
                    log[r, 2] = b
                    log[r, 3] = app
                    log[r, 4] = outcome
                    log[r, 5] = done
                    g[G_LOG_N] = r + 1
                last = qlen - 1
                if k != last:
                    for f in range(NQ):
                        qd[ch, k, f] = qd[ch, last, f]
                chs[ch, C_QLEN] = last
            # ---- step 6: model counters
            pa = g[G_PRIO]
            if pa >= 0:
                ctr[pa, HPE_CYCLES] += 1
                la = g[G_LAST_APP]
                if la >= 0 and la != pa and _prio_waiting(qd, bk, chs, pa, now):
                    ctr[pa, INTERF] += 1
                if cs[pa, OUT_HITS] > 0:
                    ctr[pa, EP_HIT_TIME] += 1
                if cs[pa, OUT_MISS] > 0:
                    ctr[pa, EP_MISS_TIME] += 1
            for a in range(n):
                if cs[a, OUT_HITS] > 0:
                    ctr[a, HIT_TIME] += 1
                if cs[a, OUT_MISS] > 0:
                    ctr[a, MISS_TIME] += 1
            g[G_PHASE] = 0

        # ---- steps 1-3 of the next cycle: core ticks
        now += 1
        g[G_CYC] = now
        W = win.shape[1]
        for i in range(n):
            if cs[i, FINISHED] == 1:
                continue
            deliver(cs, win, mshr, i, now)
            retire(cs, win, i, p.width)
            refill(trace, cs, win, i)
            issued = 0
            while issued < p.width:
                seq = next_issue(cs, win, mshr, i)
                if seq < 0:
                    break
                issued += 1
                addr = win[i, seq % W, W_ADDR] + (i << p.app_shift)
                line = addr >> 6
                ctr[i, L1_ACC] += 1
                h, _, _ = lookup_fill(l1t, l1o, l1s, l1c, i, line & (p.l1_sets - 1), line, i,
                                      quota, False)
                if h:
                    ctr[i, L1_HIT] += 1
                    mark_issued(cs, win, mshr, i, seq, now + p.l1_lat, ACC_L1)
                    continue
                t = now + p.l1_lat
                if p.has_llc == 1:
                    cid = 0 if p.llc_shared == 1 else i
                    sl = line & (p.llc_sets - 1)
                    ep = g[G_PRIO] == i
                    ctr[i, LLC_ACC] += 1
                    if p.use_ats == 1:
                        slot = smap[sl]
                        if slot >= 0:
                            d = ats_lookup(atst, atss, atsc, i, slot, line)
                            atsh[i, d] += 1
                            if ep:
                                ctr[i, EP_ATS_ACC] += 1
                                if d > 0:
                                    ctr[i, EP_ATS_HIT] += 1
                    h, _, _ = lookup_fill(llt, llo, lls, llc, cid, sl, line, i, quota,
                                          g[G_PART] == 1)
                    if h:
                        ctr[i, LLC_HIT] += 1
                        if ep:
                            ctr[i, EP_HIT] += 1
                        mark_issued(cs, win, mshr, i, seq, t + p.llc_lat, ACC_LLC_HIT)
                        continue
                    ctr[i, LLC_MISS] += 1
                    if ep:
                        ctr[i, EP_MISS] += 1
                    t += p.llc_lat
                mi = mark_issued(cs, win, mshr, i, seq, PENDING, ACC_LLC_MISS)
                ch, rank, bank, row, col = decompose(addr, p.il_kind, p.channels, p.ranks,
                                                     p.banks, p.cols, p.stripe)
                k = chs[ch, C_QLEN]
                qd[ch, k, Q_APP] = i
                qd[ch, k, Q_BANK] = rank * p.banks + bank
                qd[ch, k, Q_ROW] = row
                qd[ch, k, Q_READY] = t
                qd[ch, k, Q_SEQ] = g[G_SEQ]
                qd[ch, k, Q_CORE] = i
                qd[ch, k, Q_MSHR] = mi
                g[G_SEQ] += 1
                chs[ch, C_QLEN] = k + 1
                if k + 1 > mon[MON_QUEUE_PEAK]:
                    mon[MON_QUEUE_PEAK] = k + 1
                ctr[i, DRAM_REQ] += 1
        g[G_PHASE] = 1


def advance(c, m: Caches, q: Ctrl, s: Stats, g: np.ndarray, p: Params, stop: int) -> None:
    """Run until the core ticks of cycle ``stop`` are done (see module doc)."""
    _loop(c.trace, c.cs, c.win, c.mshr, m.l1_tag, m.l1_owner, m.l1_stamp, m.l1_clock,
          m.ll_tag, m.ll_owner, m.ll_stamp, m.ll_clock, m.quota, m.ats_tag, m.ats_stamp,
          m.ats_clock, m.samp_map, q.qd, q.bk, q.chs, q.blacklist, q.low_int, s.ctr,
          s.ats_hist, s.stk_hist, s.stk_sum, s.mon, s.log, g, p, stop)
