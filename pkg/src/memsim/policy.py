"""Slowdown-driven resource allocation.

Bandwidth policies return new lottery weights for the epoch draw; cache
policies return way quotas for the shared LLC. All functions are pure apart
from the small state objects they are explicitly handed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .mise import BandwidthAllocation

EPS = 1e-12


@dataclass
class QosConfig:
    bounds: Dict[int, float]
    step: float = 0.02
    patience: int = 10

    def problems(self, prefix: str = "policy"):
        out = []
        if not self.bounds:
            out.append((f"{prefix}.aoi", "at least one application of interest is required"))
        for a, b in self.bounds.items():
            if b <= 1:
                out.append((f"{prefix}.bound", f"bound for app {a} must be > 1"))
        if not 0 < self.step < 1:
            out.append((f"{prefix}.step", "must be in (0, 1)"))
        return out


@dataclass
class QosState:
    missed_streak: Dict[int, int] = field(default_factory=dict)


@dataclass
class FairConfig:
    bound: float = 2.0
    step: float = 0.02
    history_intervals: int = 3
    tighten: float = 0.95
    loosen: float = 1.05

    def problems(self, prefix: str = "policy"):
        out = []
        if self.bound <= 1:
            out.append((f"{prefix}.bound", "must be > 1"))
        if not 0 < self.step < 1:
            out.append((f"{prefix}.step", "must be in (0, 1)"))
        if self.history_intervals < 1:
            out.append((f"{prefix}.history_intervals", "must be >= 1"))
        return out


@dataclass
class PartitionDecision:
    ways: List[int]
    trace: List[Tuple[int, int, float]] = field(default_factory=list)  # (app, k, utility)
    infeasible: bool = False


def _est_list(alloc: BandwidthAllocation, estimates) -> List[Optional[float]]:
    if isinstance(estimates, Mapping):
        return [estimates.get(a) for a in alloc.apps]
    return list(estimates)


def mise_qos_update(alloc: BandwidthAllocation, estimates, qos: QosConfig,
                    state: Optional[QosState] = None):
    """One interval of the QoS controller.

    Returns (new allocation, {aoi: "met" | "missed" | "infeasible"}).
    """
    state = state if state is not None else QosState()
    est = _est_list(alloc, estimates)
    w = alloc.weights.copy()
    idx = {a: i for i, a in enumerate(alloc.apps)}
    aoi = [idx[a] for a in qos.bounds]
    status = {}
    for a in qos.bounds:
        i = idx[a]
        e, b = est[i], qos.bounds[a]
        if e is None:
            status[a] = "unknown"
            continue
        if e < b:
            w[i] -= qos.step
        elif e > b:
            w[i] += qos.step
        w[i] = min(max(w[i], 0.0), 1.0)
        missed = e > b
        state.missed_streak[a] = state.missed_streak.get(a, 0) + 1 if missed else 0
        status[a] = "missed" if missed else "met"
    aoi_sum = float(w[aoi].sum())
    if aoi_sum > 1.0:
        w[aoi] /= aoi_sum
        aoi_sum = 1.0
    others = [i for i in range(len(w)) if i not in aoi]
    if others:
        w[others] = (1.0 - aoi_sum) / len(others)
    elif aoi_sum > 0:
        w[aoi] /= aoi_sum
    else:
        w[aoi] = 1.0 / len(aoi)
    all_to_aoi = float(w[aoi].sum()) >= 1.0 - 1e-9
    for a in qos.bounds:
        if all_to_aoi and state.missed_streak.get(a, 0) >= qos.patience:
            status[a] = "infeasible"
    return BandwidthAllocation(dict(zip(alloc.apps, w / w.sum()))), status


def mise_fair_redistribute(alloc: BandwidthAllocation, estimates, fair: FairConfig):
    est = _est_list(alloc, estimates)
    w = alloc.weights.copy()
    below = [i for i, e in enumerate(est) if e is not None and e < fair.bound]
    above = [i for i, e in enumerate(est) if e is not None and e >= fair.bound]
    if not above:
        return BandwidthAllocation(alloc.as_dict())
    stolen = 0.0
    for i in below:
        take = min(fair.step, w[i])
        w[i] -= take
        stolen += take
    for i in above:
        w[i] += stolen / len(above)
    return BandwidthAllocation(dict(zip(alloc.apps, w / w.sum())))


def mise_fair_adjust_bound(history: Sequence[Sequence[bool]], estimates,
                           fair: FairConfig) -> float:
    """New bound from the last ``history_intervals`` rows of per-app met bits."""
    est = [e for e in (estimates.values() if isinstance(estimates, Mapping) else estimates)
           if e is not None]
    recent = list(history)[-fair.history_intervals:]
    if len(recent) < fair.history_intervals or not est:
        return fair.bound
    if all(all(row) for row in recent):
        return fair.tighten * max(est)
    if all(sum(1 for m in row if not m) > len(row) / 2 for row in recent):
        return fair.loosen * max(est)
    return fair.bound


def asm_mem_weights(estimates) -> BandwidthAllocation:
    """Epoch probabilities proportional to estimated slowdown.

    Missing or non-finite estimates count as 1.0; such apps are listed in the
    returned allocation's ``flags``.
    """
    if isinstance(estimates, Mapping):
        apps = list(estimates.keys())
        vals = [estimates[a] for a in apps]
    else:
        vals = list(estimates)
        apps = list(range(len(vals)))
    flagged = []
    clean = []
    for a, v in zip(apps, vals):
        if v is None or not math.isfinite(v) or v <= 0:
            flagged.append(a)
            v = 1.0
        clean.append(v)
    tot = sum(clean)
    alloc = BandwidthAllocation({a: v / tot for a, v in zip(apps, clean)})
    alloc.flags = flagged
    return alloc


def _utility(curve: Sequence[float], n: int, k: int) -> float:
    a, b = curve[n - 1], curve[n + k - 1]
    if math.isinf(a):
        return 0.0 if math.isinf(b) else math.inf
    return (a - b) / k


def asm_cache_partition(curves: Sequence[Sequence[float]],
                        total_ways: Optional[int] = None) -> PartitionDecision:
    """Lookahead way allocation maximizing marginal slowdown utility.

    ``curves[i][n-1]`` is app i's slowdown with n ways. Every app starts with
    one way; each step grants the (app, k) pair with the highest utility
    (ties: smaller k, then the app holding fewer ways, then lower app id)
    until all ways are handed out.
    """
    n_apps = len(curves)
    if n_apps == 0:
        return PartitionDecision([])
    total = len(curves[0]) if total_ways is None else total_ways
    if total < n_apps:
        raise ValueError(f"{total} ways cannot give each of {n_apps} apps one way")
    ways = [1] * n_apps
    left = total - n_apps
    trace = []
    while left > 0:
        best = None
        for i, curve in enumerate(curves):
            for k in range(1, min(left, len(curve) - ways[i]) + 1):
                u = _utility(curve, ways[i], k)
                if best is None or u > best[0] or (
                        u == best[0] and (k, ways[i], i) < (best[1], ways[best[2]], best[2])):
                    best = (u, k, i)
        if best is None:
            # every curve is exhausted; hand the rest to app 0
            ways[0] += left
            trace.append((0, left, 0.0))
            break
        u, k, i = best
        ways[i] += k
        left -= k
        trace.append((i, k, u))
    return PartitionDecision(ways, trace)


def asm_qos_allocate(aoi: int, bound: float, curves: Sequence[Sequence[float]]) -> PartitionDecision:
    total = len(curves[aoi])
    n_apps = len(curves)
    cap = total - (n_apps - 1)
    n_aoi = next((n for n in range(1, cap + 1) if curves[aoi][n - 1] <= bound), None)
    infeasible = n_aoi is None
    if infeasible:
        n_aoi = cap
    others = [i for i in range(n_apps) if i != aoi]
    ways = [0] * n_apps
    ways[aoi] = n_aoi
    trace = [(aoi, n_aoi - 1, 0.0)]
    if others:
        sub = asm_cache_partition([curves[i] for i in others], total - n_aoi)
        for j, i in enumerate(others):
            ways[i] = sub.ways[j]
        trace += [(others[a], k, u) for a, k, u in sub.trace]
    return PartitionDecision(ways, trace, infeasible)


def asm_cache_mem_step(curves: Sequence[Sequence[float]]):
    """Partition the cache, then weight epochs by each app's slowdown at its grant."""
    dec = asm_cache_partition(curves)
    sds = [curves[i][w - 1] for i, w in enumerate(dec.ways)]
    return dec, asm_mem_weights(sds)
