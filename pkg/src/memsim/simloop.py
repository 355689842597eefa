"""Whole-system simulation: builds kernel state from a config and runs it.

Per-cycle order (one global clock):

1. DRAM completions are delivered to the cores
2. cache state is updated at lookup time (a miss allocates its tag immediately)
3. core ticks in ascending core id, possibly enqueueing DRAM requests
4. boundary events: samples, window end (model estimation, then policy
   update), intensity reclassification, epoch priority draw; BLISS clearing
5. each channel's scheduler selects and issues at most one request
6. model counters (interference/queueing cycles, outstanding hit/miss time)

Steps 1-3 and 5-6 run in the compiled kernel; step 4 runs here at the few
cycles where something is due.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import kernel as K
from .asm import AsmQuantumCounters, estimate_quantum, scaled_epoch_ats, slowdown_curve
from .cache import sample_map
from .config import SimConfig
from .core import make_core_arrays
from .dram import INTERLEAVINGS
from .mise import BandwidthAllocation, MiseCounters, assign_epoch, estimate_interval
from .policy import (FairConfig, QosConfig, QosState, asm_cache_mem_step, asm_cache_partition,
                     asm_mem_weights, asm_qos_allocate, mise_fair_adjust_bound,
                     mise_fair_redistribute, mise_qos_update)
from .rng import SplitMix64
from .sched import POLICIES

log = logging.getLogger("memsim")

APP_SHIFT = 40
LOTTERY_STREAM = 0x5EED_E90C


def _next(cur: int, period: int) -> int:
    return (cur // period + 1) * period


INTERVAL_COLUMNS = ["window", "app", "start_cycle", "end_cycle", "retired", "ipc", "alpha",
                    "srsr", "arsr", "car_shared", "car_alone", "estimated_slowdown", "weight",
                    "ways", "bound", "status", "flags", "slowdown_n"]


@dataclass
class RunResult:
    n_apps: int
    cycles: int
    window_cycles: int
    retired: np.ndarray
    total_cycles: np.ndarray
    stall_cycles: np.ndarray
    window_ends: List[int]
    window_retired: np.ndarray          # [windows + 1, apps], row 0 is cycle 0
    estimates: List[List[Optional[float]]]
    interval_rows: List[dict]
    sample_cycles: np.ndarray
    sample_retired: np.ndarray          # [samples, apps]
    sample_llc: np.ndarray
    streak_hist: np.ndarray
    streak_sum: np.ndarray
    monitors: Dict[str, int]
    counters: np.ndarray
    epoch_log: np.ndarray
    service_log: np.ndarray
    flags: List[str] = field(default_factory=list)

    @property
    def ipc(self) -> np.ndarray:
        return self.retired / np.maximum(self.total_cycles, 1)

    @property
    def alpha(self) -> np.ndarray:
        return self.stall_cycles / np.maximum(self.total_cycles, 1)


class Simulation:
    def __init__(self, cfg: SimConfig, sample_period: Optional[int] = None):
        self.cfg = cfg
        traces = [a.load() for a in cfg.apps]
        n = self.n = len(traces)
        core, l1, llc, dram = cfg.core, cfg.l1, cfg.llc, cfg.dram
        self.asm_on = cfg.model == "asm"
        self.c = make_core_arrays(traces, core, [a.repeat for a in cfg.apps])
        llc_sets = llc.sets if llc else 1
        llc_ways = llc.associativity if llc else 1
        n_llc = (1 if llc.shared else n) if llc else 1
        smap = sample_map(llc_sets, cfg.asm.sampled_sets if self.asm_on else None)
        self.m = K.make_caches(n, l1.sets, l1.associativity, n_llc, llc_sets, llc_ways, smap,
                               self.asm_on)
        banks = dram.banks_per_channel
        self.q = K.make_ctrl(n, dram.channels, banks, cfg.scheduler.queue_capacity)
        self.s = K.make_stats(n, llc_ways, cfg.service_log)
        self.g = K.make_globals()
        il = dram.interleaving
        t = dram.timing
        sc = cfg.scheduler
        self.p = K.Params(
            n, core.issue_width, core.window_size, core.mshr_count, core.l1_hit_latency_cycles,
            l1.sets, 1 if llc else 0, 1 if (llc and llc.shared) else 0, llc_sets,
            llc.hit_latency_cycles if llc else 0, dram.channels, dram.ranks_per_channel,
            dram.banks_per_rank, dram.blocks_per_row, INTERLEAVINGS[il.kind], il.blocks_per_stripe,
            t.tRCD, t.tRP, t.tCL, t.tCCD, t.tRAS, t.burst_cycles, POLICIES[sc.policy],
            1 if cfg.overlay else 0, sc.bliss_threshold, sc.bliss_clearing_interval, sc.cap,
            1 if self.asm_on else 0, APP_SHIFT,
        )
        self.sample_period = sample_period or cfg.oracle.sample_period
        self.rng = SplitMix64(cfg.seed ^ LOTTERY_STREAM)
        self.llc_ways = llc_ways
        self.hit_latency = core.l1_hit_latency_cycles + (llc.hit_latency_cycles if llc else 0)

        pol = cfg.policy
        if pol.kind == "always_prioritize":
            w = [1.0 if a == pol.aoi[0] else 0.0 for a in range(n)]
            self.alloc = BandwidthAllocation(w)
        else:
            self.alloc = BandwidthAllocation.equal(n)
        self.qos_state = QosState()
        self.fair = FairConfig(pol.bound, pol.step, pol.history_intervals, pol.tighten, pol.loosen)
        self.fair_history: List[List[bool]] = []
        self.ways: List[int] = []
        self.prev_est: List[Optional[float]] = [None] * n

    # ------------------------------------------------------------------
    def run(self, stop_at_retired: Optional[int] = None, max_cycles: Optional[int] = None
            ) -> RunResult:
        cfg, c, s, q = self.cfg, self.c, self.s, self.q
        n = self.n
        L = max_cycles if max_cycles is not None else cfg.run_length_cycles
        W = cfg.window_cycles
        E = cfg.epoch_cycles
        P = self.sample_period
        GW = cfg.scheduler.grouping_window if cfg.scheduler.policy == "grouping" else 0
        periods = [W, P] + ([E] if cfg.overlay else []) + ([GW] if GW else [])

        win_snap_ctr = s.ctr.copy()
        win_snap_core = (c.retired.copy(), c.total.copy(), c.stall.copy())
        win_snap_ats = s.ats_hist.copy()
        grp_snap = (s.ctr[:, K.LLC_MISS if self.p.has_llc else K.DRAM_REQ].copy(), c.retired.copy())
        hpe = np.zeros(n, dtype=np.int64)
        window_ends: List[int] = []
        window_retired = [c.retired.copy()]
        estimates: List[List[Optional[float]]] = []
        rows: List[dict] = []
        samples_c = [0]
        samples_r = [c.retired.copy()]
        samples_l = [s.ctr[:, K.LLC_ACC].copy()]
        epochs: List[int] = []
        flags: List[str] = []
        win_index = 0

        T = 0
        while True:
            # boundary events at cycle T (the kernel has finished core ticks of T)
            if T > 0 and T % P == 0:
                samples_c.append(T)
                samples_r.append(c.retired.copy())
                samples_l.append(s.ctr[:, K.LLC_ACC].copy())
                if stop_at_retired is not None and c.retired[0] >= stop_at_retired:
                    break
            if T > 0 and T % W == 0:
                d_ctr = s.ctr - win_snap_ctr
                d_ret = c.retired - win_snap_core[0]
                d_tot = c.total - win_snap_core[1]
                d_stl = c.stall - win_snap_core[2]
                d_ats = s.ats_hist - win_snap_ats
                est_row, wrows = self._window_end(win_index, T - W, T, d_ctr, d_ret, d_tot,
                                                  d_stl, d_ats, hpe)
                estimates.append(est_row)
                rows += wrows
                window_ends.append(T)
                window_retired.append(c.retired.copy())
                win_snap_ctr = s.ctr.copy()
                win_snap_core = (c.retired.copy(), c.total.copy(), c.stall.copy())
                win_snap_ats = s.ats_hist.copy()
                hpe[:] = 0
                win_index += 1
            if GW and T > 0 and T % GW == 0:
                col = K.LLC_MISS if self.p.has_llc else K.DRAM_REQ
                misses = s.ctr[:, col] - grp_snap[0]
                instr = c.retired - grp_snap[1]
                mpki = 1000.0 * misses / np.maximum(instr, 1)
                q.low_int[:] = (mpki <= cfg.scheduler.grouping_threshold_mpki).astype(np.int64)
                grp_snap = (s.ctr[:, col].copy(), c.retired.copy())
            if T >= L:
                break
            if cfg.overlay and T % E == 0:
                a = assign_epoch(self.alloc, self.rng)
                self.g[K.G_PRIO] = a
                hpe[a] += 1
                epochs.append(a)
            stop = min([_next(T, p) for p in periods] + [L])
            K.advance(self.c, self.m, self.q, self.s, self.g, self.p, stop)
            T = stop
        K.flush_streaks(q, s)
        if stop_at_retired is not None and c.retired[0] < stop_at_retired:
            flags.append("truncated")
        mon = {
            "tccd_violations": int(s.mon[K.MON_TCCD]),
            "bank_overlap_violations": int(s.mon[K.MON_OVERLAP]),
            "cap_violations": int(s.mon[K.MON_CAP]),
            "issues": int(s.mon[K.MON_ISSUES]),
            "queue_peak": int(s.mon[K.MON_QUEUE_PEAK]),
        }
        return RunResult(
            n, T, W, c.retired.copy(), c.total.copy(), c.stall.copy(), window_ends,
            np.array(window_retired), estimates, rows, np.array(samples_c),
            np.array(samples_r), np.array(samples_l), s.stk_hist.copy(), s.stk_sum.copy(), mon,
            s.ctr.copy(), np.array(epochs, dtype=np.int64),
            s.log[: self.g[K.G_LOG_N]].copy() if cfg.service_log else np.zeros((0, 6), np.int64), flags,
        )

    # ------------------------------------------------------------------
    def _window_end(self, w, start, end, d_ctr, d_ret, d_tot, d_stl, d_ats, hpe):
        cfg, n = self.cfg, self.n
        ests: List[Optional[float]] = [None] * n
        rows = []
        details = [dict() for _ in range(n)]
        curves = None
        if cfg.model == "mise":
            for a in range(n):
                mc = MiseCounters(int(d_ctr[a, K.SERVED]), int(hpe[a]), int(d_ctr[a, K.HPE_SERVED]),
                                  int(d_ctr[a, K.INTERF]), int(d_stl[a]), int(d_tot[a]))
                e = estimate_interval(a, w, mc, cfg.mise, self.prev_est[a])
                ests[a] = e.slowdown
                details[a] = {"alpha": e.alpha, "srsr": e.srsr, "arsr": e.arsr, "flags": e.flags}
        elif cfg.model == "asm":
            curves = []
            for a in range(n):
                ac = self._asm_counters(a, d_ctr, d_ats, hpe)
                fl = []
                if ac is None:
                    ac, fl = self._asm_counters(a, d_ctr, d_ats, hpe, fallback=True), ["ats_unsampled"]
                e = estimate_quantum(ac[0], cfg.asm, a, w, self.prev_est[a])
                ests[a] = e.slowdown
                details[a] = {"alpha": d_stl[a] / d_tot[a] if d_tot[a] else 0.0,
                              "car_shared": e.car_shared, "car_alone": e.car_alone,
                              "flags": e.flags + fl + ([ac[1]] if ac[1] else [])}
                if e.car_alone is not None:
                    curve = [ev.slowdown_n for ev in slowdown_curve(
                        ac[0], d_ats[a], cfg.asm.quantum_cycles, e.car_alone)]
                else:
                    curve = [e.slowdown if e.slowdown is not None else 1.0] * self.llc_ways
                curves.append(curve)
                details[a]["slowdown_n"] = curve
        for a in range(n):
            if ests[a] is not None:
                self.prev_est[a] = ests[a]
        status = self._policy_update(ests, curves)
        for a in range(n):
            dt = details[a]
            rows.append({
                "window": w, "app": a, "start_cycle": start, "end_cycle": end,
                "retired": int(d_ret[a]), "ipc": d_ret[a] / (end - start),
                "alpha": dt.get("alpha", d_stl[a] / d_tot[a] if d_tot[a] else 0.0),
                "srsr": dt.get("srsr"), "arsr": dt.get("arsr"),
                "car_shared": dt.get("car_shared"), "car_alone": dt.get("car_alone"),
                "estimated_slowdown": ests[a], "weight": self.alloc.weights[a],
                "ways": self.ways[a] if self.ways else None,
                "bound": self.fair.bound if cfg.policy.kind == "mise_fair" else (
                    cfg.policy.bound if cfg.policy.kind in ("mise_qos", "asm_qos") and
                    a in cfg.policy.aoi else None),
                "status": status.get(a, ""), "flags": ";".join(dt.get("flags", [])),
                "slowdown_n": ";".join(f"{x:.6g}" for x in dt["slowdown_n"])
                if "slowdown_n" in dt else "",
            })
        return ests, rows

    def _asm_counters(self, a, d_ctr, d_ats, hpe, fallback=False):
        eh, em = int(d_ctr[a, K.EP_HIT]), int(d_ctr[a, K.EP_MISS])
        q_acc = int(d_ats[a].sum())
        q_hit = q_acc - int(d_ats[a, 0])
        hits, misses, flag = scaled_epoch_ats(int(d_ctr[a, K.EP_ATS_HIT]),
                                              int(d_ctr[a, K.EP_ATS_ACC]), q_hit, q_acc, eh + em)
        if hits is None:
            if not fallback:
                return None
            # no sampled evidence at all: assume no contention misses
            hits, misses = eh, em
        ac = AsmQuantumCounters(
            int(hpe[a]), eh, em, int(d_ctr[a, K.EP_HIT_TIME]), int(d_ctr[a, K.EP_MISS_TIME]),
            hits, misses, int(d_ctr[a, K.INTERF]), int(d_ctr[a, K.LLC_ACC]),
            int(d_ctr[a, K.LLC_HIT]), int(d_ctr[a, K.LLC_MISS]), int(d_ctr[a, K.HIT_TIME]),
            int(d_ctr[a, K.MISS_TIME]), self.hit_latency)
        return ac, flag

    def _policy_update(self, ests, curves):
        pol = self.cfg.policy
        n = self.n
        status = {}
        if pol.kind == "mise_qos":
            qc = QosConfig({a: pol.bound for a in pol.aoi}, pol.step, pol.patience)
            self.alloc, status = mise_qos_update(self.alloc, ests, qc, self.qos_state)
        elif pol.kind == "mise_fair":
            known = [e for e in ests if e is not None]
            if known:
                self.alloc = mise_fair_redistribute(self.alloc, ests, self.fair)
                self.fair_history.append([e <= self.fair.bound for e in known])
                self.fair.bound = mise_fair_adjust_bound(self.fair_history, known, self.fair)
        elif pol.kind == "asm_mem":
            self.alloc = asm_mem_weights(ests)
        elif pol.kind in ("asm_cache", "asm_qos", "asm_cache_mem"):
            if pol.kind == "asm_cache":
                dec = asm_cache_partition(curves)
            elif pol.kind == "asm_qos":
                dec = asm_qos_allocate(pol.aoi[0], pol.bound, curves)
                status = {pol.aoi[0]: "infeasible" if dec.infeasible else "met"}
            else:
                dec, self.alloc = asm_cache_mem_step(curves)
            self.ways = list(dec.ways)
            self.m.quota[:n] = dec.ways
            self.g[K.G_PART] = 1
        return status


def run(config: SimConfig, **kw) -> RunResult:
    """Simulate ``config``; see :class:`Simulation` for keyword options."""
    sample_period = kw.pop("sample_period", None)
    return Simulation(config, sample_period).run(**kw)
