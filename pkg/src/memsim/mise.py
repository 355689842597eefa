"""Request-service-rate slowdown model.

Each interval of M cycles is cut into epochs of N cycles. At every epoch start
one application is drawn by lottery and its requests get top priority at the
controller for that epoch. The service rate it sees while prioritized (ARSR)
approximates its alone-run rate; the rate over the whole interval is SRSR.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np

from .errors import ConfigError, DegenerateDenominator, NoHighPriorityEpochs, NoProgress


@dataclass
class MiseConfig:
    interval_cycles: int = 5_000_000
    epoch_cycles: int = 10_000
    alpha_threshold: float = 0.7

    def problems(self, prefix: str = "mise"):
        out = []
        if self.epoch_cycles <= 0:
            out.append((f"{prefix}.epoch", "must be > 0"))
        elif self.interval_cycles <= 0 or self.interval_cycles % self.epoch_cycles:
            out.append((f"{prefix}.interval", "must be a positive multiple of the epoch"))
        if not 0 < self.alpha_threshold <= 1:
            out.append((f"{prefix}.alpha_threshold", "must be in (0, 1]"))
        return out

    def validate(self):
        p = self.problems()
        if p:
            raise ConfigError(p)


@dataclass
class MiseCounters:
    requests_served: int = 0
    hpe_count: int = 0
    hpe_requests: int = 0
    interference_cycles: int = 0
    stall_cycles: int = 0
    total_cycles: int = 0

    @property
    def alpha(self) -> float:
        return self.stall_cycles / self.total_cycles if self.total_cycles else 0.0


class BandwidthAllocation:
    """Lottery weights per app id (nonnegative, summing to 1)."""

    def __init__(self, weights):
        if isinstance(weights, Mapping):
            self.apps = list(weights.keys())
            w = [weights[a] for a in self.apps]
        else:
            w = list(weights)
            self.apps = list(range(len(w)))
        self.weights = np.asarray(w, dtype=float)
        self.validate()

    @classmethod
    def equal(cls, n: int) -> "BandwidthAllocation":
        return cls([1.0 / n] * n)

    def validate(self):
        if len(self.weights) == 0:
            raise ValueError("empty allocation")
        if (self.weights < 0).any():
            raise ValueError("negative weight")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {self.weights.sum()!r}, not 1")

    def __getitem__(self, app):
        return float(self.weights[self.apps.index(app)])

    def as_dict(self) -> Dict[int, float]:
        return {a: float(w) for a, w in zip(self.apps, self.weights)}

    def __repr__(self):
        return f"BandwidthAllocation({self.as_dict()})"


def assign_epoch(alloc: BandwidthAllocation, rng):
    """Draw the epoch's priority app; uses exactly one ``rng.random()`` draw."""
    u = rng.random()
    acc = 0.0
    last = 0
    for i, w in enumerate(alloc.weights):
        if w <= 0:
            continue
        last = i
        acc += w
        if u < acc:
            return alloc.apps[i]
    # u landed in the rounding slack above the running sum
    return alloc.apps[last]


def record_interference_cycle(counters: MiseCounters, prio_request_waiting: bool,
                              last_issued_app: Optional[int], prio_app: int) -> bool:
    """Count one interference cycle for the priority app when the condition holds."""
    hit = (prio_request_waiting and last_issued_app is not None
           and last_issued_app != prio_app)
    if hit:
        counters.interference_cycles += 1
    return hit


def compute_srsr(counters: MiseCounters, interval_cycles: int) -> float:
    return counters.requests_served / interval_cycles


def compute_arsr(counters: MiseCounters, epoch_cycles: int) -> float:
    if counters.hpe_count == 0:
        raise NoHighPriorityEpochs("no highest-priority epochs this interval")
    den = epoch_cycles * counters.hpe_count - counters.interference_cycles
    if den <= 0:
        raise DegenerateDenominator(f"ARSR denominator {den}")
    return counters.hpe_requests / den


def estimate_slowdown(arsr: float, srsr: float, alpha: float,
                      config: MiseConfig = MiseConfig()) -> float:
    if srsr <= 0:
        raise NoProgress("no requests served this interval")
    ratio = arsr / srsr
    if alpha < config.alpha_threshold:
        return (1.0 - alpha) + alpha * ratio
    return ratio


@dataclass
class MiseEstimate:
    app: int
    interval: int
    srsr: float
    arsr: Optional[float]
    alpha: float
    slowdown: Optional[float]
    flags: List[str] = field(default_factory=list)


def estimate_interval(app: int, interval: int, counters: MiseCounters, config: MiseConfig,
                      previous: Optional[float]) -> MiseEstimate:
    """Estimate one app for one interval, carrying ``previous`` forward when unavailable."""
    srsr = compute_srsr(counters, config.interval_cycles)
    alpha = counters.alpha
    try:
        arsr = compute_arsr(counters, config.epoch_cycles)
        sd = estimate_slowdown(arsr, srsr, alpha, config)
        return MiseEstimate(app, interval, srsr, arsr, alpha, sd)
    except NoHighPriorityEpochs:
        return MiseEstimate(app, interval, srsr, None, alpha, previous, ["no_hpe", "carried_forward"])
    except DegenerateDenominator:
        return MiseEstimate(app, interval, srsr, None, alpha, previous, ["degenerate", "carried_forward"])
    except NoProgress:
        return MiseEstimate(app, interval, srsr, arsr, alpha, previous, ["no_progress", "carried_forward"])
