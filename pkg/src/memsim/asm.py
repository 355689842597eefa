"""Cache-access-rate slowdown model.

An app's performance is taken to be proportional to its shared-cache access
rate (CAR). The alone-run rate is measured during the epochs in which the app
holds top priority at the memory controller, after subtracting the cycles it
lost to contention misses (ATS hit but real miss) and to queueing behind other
apps' requests. ``evaluate_ways`` projects the rate for any LLC way count from
the ATS stack-distance histogram.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, DegenerateDenominator, NoEpochs, NoProgress


@dataclass
class AsmConfig:
    quantum_cycles: int = 5_000_000
    epoch_cycles: int = 10_000
    sampled_sets: Optional[int] = 64

    def problems(self, prefix: str = "asm"):
        out = []
        if self.epoch_cycles <= 0:
            out.append((f"{prefix}.epoch", "must be > 0"))
        elif self.quantum_cycles <= 0 or self.quantum_cycles % self.epoch_cycles:
            out.append((f"{prefix}.quantum", "must be a positive multiple of the epoch"))
        if self.sampled_sets is not None and self.sampled_sets < 0:
            out.append((f"{prefix}.sampled_sets", "must be >= 0"))
        return out

    def validate(self):
        p = self.problems()
        if p:
            raise ConfigError(p)


@dataclass
class AsmQuantumCounters:
    epoch_count: int = 0
    epoch_hits: int = 0
    epoch_misses: int = 0
    epoch_hit_time: int = 0
    epoch_miss_time: int = 0
    epoch_ats_hits: int = 0
    epoch_ats_misses: int = 0
    queueing_cycles: int = 0
    shared_accesses: int = 0
    quantum_hits: int = 0
    quantum_misses: int = 0
    quantum_hit_time: int = 0
    quantum_miss_time: int = 0
    llc_hit_latency: int = 20


class ExcessCycles(NamedTuple):
    cycles: float
    clamped: bool


@dataclass
class AsmWayEvaluation:
    ways: int
    quantum_hits_n: int
    delta_hits: int
    cycles_n: float
    car_n: float
    slowdown_n: float
    valid: bool = True


@dataclass
class SlowdownEstimate:
    app: int
    quantum: int
    car_shared: float
    car_alone: Optional[float]
    slowdown: Optional[float]
    flags: List[str] = field(default_factory=list)


def compute_car_shared(counters: AsmQuantumCounters, quantum_cycles: int) -> float:
    return counters.shared_accesses / quantum_cycles


def compute_excess_cycles(counters: AsmQuantumCounters,
                          hit_latency: Optional[float] = None) -> ExcessCycles:
    """Cycles lost to contention misses during the app's own epochs."""
    if counters.epoch_misses == 0:
        return ExcessCycles(0.0, False)
    raw = counters.epoch_ats_hits - counters.epoch_hits
    contention = max(0, raw)
    avg_miss = counters.epoch_miss_time / counters.epoch_misses
    if counters.epoch_hits:
        avg_hit = counters.epoch_hit_time / counters.epoch_hits
    else:
        avg_hit = counters.llc_hit_latency if hit_latency is None else hit_latency
    return ExcessCycles(contention * (avg_miss - avg_hit), raw < 0)


def compute_avg_queueing_delay(counters: AsmQuantumCounters) -> float:
    if counters.epoch_misses == 0:
        return 0.0
    return counters.queueing_cycles / counters.epoch_misses


def compute_car_alone(counters: AsmQuantumCounters, epoch_cycles: int) -> float:
    if counters.epoch_count == 0:
        raise NoEpochs("app held no epochs this quantum")
    excess = compute_excess_cycles(counters).cycles
    den = (counters.epoch_count * epoch_cycles - excess
           - counters.epoch_ats_misses * compute_avg_queueing_delay(counters))
    if den <= 0:
        raise DegenerateDenominator(f"alone-rate denominator {den}")
    return (counters.epoch_hits + counters.epoch_misses) / den


def estimate_slowdown_asm(counters: AsmQuantumCounters, epoch_cycles: int, quantum_cycles: int,
                          app: int = 0, quantum: int = 0) -> SlowdownEstimate:
    car_shared = compute_car_shared(counters, quantum_cycles)
    if car_shared <= 0:
        raise NoProgress("no shared cache accesses this quantum")
    car_alone = compute_car_alone(counters, epoch_cycles)
    flags = ["clamped"] if compute_excess_cycles(counters).clamped else []
    return SlowdownEstimate(app, quantum, car_shared, car_alone, car_alone / car_shared, flags)


def estimate_quantum(counters: AsmQuantumCounters, config: AsmConfig, app: int, quantum: int,
                     previous: Optional[float]) -> SlowdownEstimate:
    """Like ``estimate_slowdown_asm`` but carries ``previous`` forward when unavailable."""
    try:
        return estimate_slowdown_asm(counters, config.epoch_cycles, config.quantum_cycles,
                                     app, quantum)
    except (NoEpochs, DegenerateDenominator, NoProgress) as e:
        tag = {NoEpochs: "no_epochs", DegenerateDenominator: "degenerate",
               NoProgress: "no_progress"}[type(e)]
        car_shared = compute_car_shared(counters, config.quantum_cycles)
        return SlowdownEstimate(app, quantum, car_shared, None, previous, [tag, "carried_forward"])


def scaled_epoch_ats(epoch_samp_hits: int, epoch_samp_accesses: int, quantum_samp_hits: int,
                     quantum_samp_accesses: int, epoch_accesses: int):
    """Scale sampled ATS counts to all of an app's epoch accesses.

    Falls back to the quantum-wide sampled fraction when no sampled access
    happened during the app's epochs. Returns (hits, misses, flag or None).
    """
    if epoch_samp_accesses > 0:
        frac, flag = epoch_samp_hits / epoch_samp_accesses, None
    elif quantum_samp_accesses > 0:
        frac, flag = quantum_samp_hits / quantum_samp_accesses, "ats_quantum_fallback"
    else:
        return None, None, "ats_unsampled"
    hits = min(max(round(frac * epoch_accesses), 0), epoch_accesses)
    return hits, epoch_accesses - hits, flag


def quantum_hits_for_ways(stack_hist: Sequence[int], n: int, accesses: int) -> int:
    """Scaled hits the app would get with ``n`` ways (index 0 of the histogram is misses)."""
    h = np.asarray(stack_hist)
    total = int(h.sum())
    if total == 0:
        return 0
    return round(int(h[1:n + 1].sum()) / total * accesses)


def evaluate_ways(counters: AsmQuantumCounters, stack_hist: Sequence[int], n: int,
                  quantum_cycles: int, car_alone: float) -> AsmWayEvaluation:
    assoc = len(stack_hist) - 1
    if not 1 <= n <= assoc:
        raise ValueError(f"way count {n} outside 1..{assoc}")
    accesses = counters.quantum_hits + counters.quantum_misses
    qh_n = quantum_hits_for_ways(stack_hist, n, accesses)
    delta = qh_n - counters.quantum_hits
    avg_miss = counters.quantum_miss_time / counters.quantum_misses if counters.quantum_misses else 0.0
    if counters.quantum_hits:
        avg_hit = counters.quantum_hit_time / counters.quantum_hits
    else:
        avg_hit = float(counters.llc_hit_latency)
    if not counters.quantum_misses:
        # nothing to save or lose without misses to compare against
        avg_miss = avg_hit
    cycles_n = quantum_cycles - delta * (avg_miss - avg_hit)
    if cycles_n <= 0:
        return AsmWayEvaluation(n, qh_n, delta, cycles_n, math.inf, math.inf, False)
    car_n = accesses / cycles_n
    sd = car_alone / car_n if car_n > 0 else math.inf
    return AsmWayEvaluation(n, qh_n, delta, cycles_n, car_n, sd)


def slowdown_curve(counters: AsmQuantumCounters, stack_hist: Sequence[int], quantum_cycles: int,
                   car_alone: float) -> List[AsmWayEvaluation]:
    """Evaluations for n = 1..assoc with slowdown_n made nonincreasing in n."""
    out = [evaluate_ways(counters, stack_hist, n, quantum_cycles, car_alone)
           for n in range(1, len(stack_hist))]
    best = math.inf
    for ev in out:
        best = min(best, ev.slowdown_n)
        ev.slowdown_n = best
    return out
