"""Ground truth and evaluation metrics.

Actual slowdowns come from alone runs of each application under the same
configuration. The shared run records every app's retired-instruction count
at each window end; the alone run samples its count every ``sample_period``
cycles, and the alone cycles spent on the same instruction range are found by
linear interpolation between the bracketing samples.
"""
from __future__ import annotations

import copy
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

STREAK_CAP = 16


@dataclass
class SlowdownRecord:
    app: int
    window: int
    ipc_alone: float
    ipc_shared: float
    actual_slowdown: float
    estimated_slowdown: Optional[float] = None
    error_percent: Optional[float] = None

    @classmethod
    def make(cls, app, window, ipc_alone, ipc_shared, estimated=None):
        actual = ipc_alone / ipc_shared
        rec = cls(app, window, ipc_alone, ipc_shared, actual, estimated)
        if estimated is not None:
            rec.error_percent = estimation_error(rec)
        return rec


@dataclass
class StreakHistogram:
    """Per-app streak counts keyed by length 1..16 (16 collects 16 and longer)."""

    counts: Dict[int, Dict[int, int]] = field(default_factory=dict)
    totals: Dict[int, Dict[int, int]] = field(default_factory=dict)

    def served(self, app: int) -> int:
        return sum(self.totals.get(app, {}).values())

    def mean_length(self, app: int) -> float:
        n = sum(self.counts.get(app, {}).values())
        return self.served(app) / n if n else 0.0

    @classmethod
    def from_arrays(cls, hist: np.ndarray, sums: np.ndarray) -> "StreakHistogram":
        h = cls()
        for a in range(hist.shape[0]):
            h.counts[a] = {b: int(hist[a, b]) for b in range(1, hist.shape[1]) if hist[a, b]}
            h.totals[a] = {b: int(sums[a, b]) for b in range(1, sums.shape[1]) if sums[a, b]}
        return h


def estimation_error(record: SlowdownRecord) -> float:
    est = record.estimated_slowdown
    return abs(est - record.actual_slowdown) / record.actual_slowdown * 100.0


def weighted_speedup(records: Iterable[SlowdownRecord]) -> float:
    return sum(r.ipc_shared / r.ipc_alone for r in records)


def harmonic_speedup(records: Iterable[SlowdownRecord]) -> float:
    recs = list(records)
    return len(recs) / sum(r.actual_slowdown for r in recs)


def maximum_slowdown(records: Iterable[SlowdownRecord]) -> float:
    recs = list(records)
    if not recs:
        raise ValueError("no records")
    return max(r.actual_slowdown for r in recs)


def streak_histogram(service_log) -> StreakHistogram:
    """Run-length encode a chronological service log.

    ``service_log`` is a sequence of app ids (one channel) or of
    (channel, app) pairs; runs are tracked per channel.
    """
    h = StreakHistogram()
    cur: Dict[int, Tuple[int, int]] = {}

    def close(ch):
        if ch in cur:
            app, n = cur.pop(ch)
            b = min(n, STREAK_CAP)
            h.counts.setdefault(app, {})
            h.totals.setdefault(app, {})
            h.counts[app][b] = h.counts[app].get(b, 0) + 1
            h.totals[app][b] = h.totals[app].get(b, 0) + n

    for e in service_log:
        ch, app = (0, e) if np.isscalar(e) else (int(e[0]), int(e[1]))
        app = int(app)
        if ch in cur and cur[ch][0] == app:
            cur[ch] = (app, cur[ch][1] + 1)
        else:
            close(ch)
            cur[ch] = (app, 1)
    for ch in list(cur):
        close(ch)
    return h


# ----------------------------------------------------------------------
# alone-run oracle

def _cycles_at(samples_c: np.ndarray, samples_r: np.ndarray, r: float) -> Optional[float]:
    """Earliest (interpolated) alone cycle at which ``r`` instructions had retired."""
    j = int(np.searchsorted(samples_r, r, side="left"))
    if j >= len(samples_r):
        return None
    if samples_r[j] == r or j == 0:
        return float(samples_c[j])
    r0, r1 = samples_r[j - 1], samples_r[j]
    c0, c1 = samples_c[j - 1], samples_c[j]
    return c0 + (r - r0) / (r1 - r0) * (c1 - c0)


@dataclass
class AloneWindow:
    app: int
    window: int
    instructions: int
    shared_cycles: int
    alone_cycles: Optional[float]
    alone_llc: Optional[float]

    @property
    def ipc_shared(self):
        return self.instructions / self.shared_cycles

    @property
    def ipc_alone(self):
        return self.instructions / self.alone_cycles if self.alone_cycles else None

    @property
    def car_alone_measured(self):
        return self.alone_llc / self.alone_cycles if self.alone_cycles else None


def align_windows(app: int, window_retired: np.ndarray, window_ends: Sequence[int],
                  alone) -> List[AloneWindow]:
    """Match each shared window of ``app`` to the alone-run span doing the same work."""
    sc = alone.sample_cycles
    sr = alone.sample_retired[:, 0].astype(float)
    sl = alone.sample_llc[:, 0].astype(float)
    out = []
    prev_end = 0
    for w, end in enumerate(window_ends):
        r0, r1 = window_retired[w, app], window_retired[w + 1, app]
        t0, t1 = _cycles_at(sc, sr, r0), _cycles_at(sc, sr, r1)
        span = llc = None
        if t0 is not None and t1 is not None and t1 > t0:
            span = t1 - t0
            llc = float(np.interp(t1, sc, sl) - np.interp(t0, sc, sl))
        out.append(AloneWindow(app, w, int(r1 - r0), end - prev_end, span, llc))
        prev_end = end
    return out


_ALONE_CACHE: Dict[tuple, object] = {}


def alone_config(cfg, app: int):
    """Same configuration with only ``app``, no model, no policy, no overlay."""
    a = copy.copy(cfg)
    a.apps = [cfg.apps[app]]
    a.model = "none"
    a.policy = copy.copy(cfg.policy)
    a.policy.kind = "none"
    a.scheduler = copy.copy(cfg.scheduler)
    a.scheduler.overlay_epoch_priority = False
    a.service_log = 0
    a.raw = dict(cfg.raw, model="none", apps=[], policy=dict(cfg.raw.get("policy", {}), kind="none"))
    return a


# sections that cannot influence a single-app run without model or policy
_ALONE_IRRELEVANT = ("seed", "run_length_cycles", "model", "mise", "asm", "policy", "service_log",
                     "apps")


def _alone_key(acfg):
    from .config import config_hash
    tr = acfg.apps[0].load()
    body = {k: v for k, v in acfg.raw.items() if k not in _ALONE_IRRELEVANT}
    body["scheduler"] = {k: v for k, v in body.get("scheduler", {}).items()
                         if k != "overlay_epoch_priority"}
    return (config_hash(body, [tr]), acfg.apps[0].repeat)


def _run_alone(args):
    from .simloop import run
    acfg, target, guard = args
    return run(acfg, stop_at_retired=target, max_cycles=guard)


def _covers(res, target, guard):
    return res.retired[0] >= target or ("truncated" in res.flags and res.cycles >= guard)


def run_alone_oracle(cfg, shared, jobs: int = 1):
    """Alone runs for every app of ``shared`` (a RunResult of ``cfg``).

    Returns ({app: [AloneWindow, ...]}, flags). Alone results are memoized by
    configuration and trace digest; a cached run is reused when it already
    covers the instructions needed.
    """
    n = shared.n_apps
    guard = 4 * max(shared.cycles, 1) + cfg.oracle.sample_period
    tasks, keys, results = [], [], {}
    for a in range(n):
        acfg = alone_config(cfg, a)
        target = int(shared.window_retired[-1, a])
        key = _alone_key(acfg)
        keys.append(key)
        hit = _ALONE_CACHE.get(key)
        if hit is not None and _covers(hit, target, guard):
            results[a] = hit
        else:
            tasks.append((a, (acfg, target, guard)))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outs = list(ex.map(_run_alone, [t[1] for t in tasks]))
    else:
        outs = [_run_alone(t[1]) for t in tasks]
    for (a, _), r in zip(tasks, outs):
        _ALONE_CACHE[keys[a]] = r
        results[a] = r
    flags = []
    windows = {}
    for a in range(n):
        alone = results[a]
        if alone.retired[0] < shared.window_retired[-1, a]:
            flags.append(f"app{a}:alone_truncated")
        windows[a] = align_windows(a, shared.window_retired, shared.window_ends, alone)
    return windows, flags


def build_records(shared, windows: Dict[int, List[AloneWindow]]) -> List[SlowdownRecord]:
    recs = []
    for a, ws in sorted(windows.items()):
        for aw in ws:
            if aw.alone_cycles is None or aw.instructions <= 0:
                continue
            est = shared.estimates[aw.window][a] if aw.window < len(shared.estimates) else None
            recs.append(SlowdownRecord.make(a, aw.window, aw.ipc_alone, aw.ipc_shared, est))
    return recs


def app_totals(windows: Dict[int, List[AloneWindow]], warmup: int) -> List[SlowdownRecord]:
    """One whole-run record per app over the non-warmup windows."""
    out = []
    for a, ws in sorted(windows.items()):
        use = [w for w in ws if w.window >= warmup and w.alone_cycles and w.instructions > 0]
        if not use:
            continue
        ins = sum(w.instructions for w in use)
        out.append(SlowdownRecord.make(a, -1, ins / sum(w.alone_cycles for w in use),
                                       ins / sum(w.shared_cycles for w in use)))
    return out


def summarize_errors(records: List[SlowdownRecord], warmup: int):
    """Mean absolute error per app and overall, excluding warmup windows."""
    per = defaultdict(list)
    for r in records:
        if r.window >= warmup and r.error_percent is not None:
            per[r.app].append(r.error_percent)
    per_app = {a: float(np.mean(v)) for a, v in sorted(per.items())}
    allv = [e for v in per.values() for e in v]
    return per_app, (float(np.mean(allv)) if allv else None)
