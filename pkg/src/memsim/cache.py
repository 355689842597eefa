"""Set-associative LRU caches, way partitioning, and auxiliary tag stores.

Tags are allocated at lookup time: a miss installs the line immediately and the
data arrives when memory responds. Tag arrays are ``[cache, set, way]``; a tag
value of -1 marks an invalid way. LRU order comes from per-cache monotone stamps.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from numba import njit

from .dram import LINE_SHIFT

INVALID = -1


@dataclass
class CacheConfig:
    capacity_bytes: int
    associativity: int
    line_bytes: int = 64
    hit_latency_cycles: int = 1
    shared: bool = False

    @property
    def sets(self) -> int:
        return self.capacity_bytes // (self.associativity * self.line_bytes)

    def problems(self, prefix: str):
        out = []
        if self.associativity < 1:
            out.append((f"{prefix}.associativity", "must be >= 1"))
            return out
        if self.line_bytes != 64:
            out.append((f"{prefix}.line_bytes", "only 64-byte lines are modelled"))
        if self.capacity_bytes % (self.associativity * self.line_bytes):
            out.append((f"{prefix}.capacity_bytes", "must be divisible by associativity x line size"))
        else:
            s = self.sets
            if s < 1 or s & (s - 1):
                out.append((f"{prefix}.capacity_bytes", "set count must be a power of two"))
        if self.hit_latency_cycles < 0:
            out.append((f"{prefix}.hit_latency_cycles", "must be >= 0"))
        return out


@dataclass
class WayPartition:
    quotas: Dict[int, int]

    def validate(self, associativity: int) -> None:
        if any(q < 1 for q in self.quotas.values()):
            raise ValueError("every way quota must be >= 1")
        if sum(self.quotas.values()) != associativity:
            raise ValueError("way quotas must sum to the associativity")


@njit(cache=True)
def lookup_fill(tags, owners, stamps, clock, cid, s, line, app, quota, partitioned):
    """Look up ``line`` in set ``s`` of cache ``cid``; install it on a miss.

    Returns (hit, victim_line, victim_owner); victim_line is -1 when an
    invalid way was filled or on a hit.
    """
    ways = tags.shape[2]
    clock[cid] += 1
    now = clock[cid]
    for w in range(ways):
        if tags[cid, s, w] == line:
            stamps[cid, s, w] = now
            return True, -1, -1
    victim = -1
    for w in range(ways):
        if tags[cid, s, w] == -1:
            victim = w
            break
    if victim < 0:
        restrict = False
        if partitioned:
            owned = 0
            for w in range(ways):
                if owners[cid, s, w] == app:
                    owned += 1
            restrict = owned >= quota[app]
        best = -1
        for w in range(ways):
            if restrict and owners[cid, s, w] != app:
                continue
            if best < 0 or stamps[cid, s, w] < stamps[cid, s, best]:
                best = w
        victim = best
    old_line = tags[cid, s, victim]
    old_owner = owners[cid, s, victim]
    tags[cid, s, victim] = line
    owners[cid, s, victim] = app
    stamps[cid, s, victim] = now
    return False, old_line, old_owner


@njit(cache=True)
def ats_lookup(tags, stamps, clock, owner, slot, line):
    """Alone-run LRU access on a sampled set.

    Returns the LRU stack distance (1 = MRU) on a hit, 0 on a miss.
    """
    ways = tags.shape[2]
    clock[owner] += 1
    now = clock[owner]
    for w in range(ways):
        if tags[owner, slot, w] == line:
            mine = stamps[owner, slot, w]
            depth = 1
            for v in range(ways):
                if tags[owner, slot, v] != -1 and stamps[owner, slot, v] > mine:
                    depth += 1
            stamps[owner, slot, w] = now
            return depth
    victim = -1
    for w in range(ways):
        if tags[owner, slot, w] == -1:
            victim = w
            break
    if victim < 0:
        victim = 0
        for w in range(1, ways):
            if stamps[owner, slot, w] < stamps[owner, slot, victim]:
                victim = w
    tags[owner, slot, victim] = line
    stamps[owner, slot, victim] = now
    return 0


def sampled_set_indices(set_count: int, sampled_sets: Optional[int]) -> np.ndarray:
    """Every (set_count / sampled_sets)-th set from set 0; all sets if None/0/too many."""
    if not sampled_sets or sampled_sets >= set_count:
        return np.arange(set_count, dtype=np.int64)
    step = set_count // sampled_sets
    return np.arange(0, step * sampled_sets, step, dtype=np.int64)


def sample_map(set_count: int, sampled_sets: Optional[int]) -> np.ndarray:
    """Array mapping set index -> ATS slot (or -1 when not sampled)."""
    m = np.full(set_count, -1, dtype=np.int64)
    idx = sampled_set_indices(set_count, sampled_sets)
    m[idx] = np.arange(len(idx), dtype=np.int64)
    return m


class AccessResult(NamedTuple):
    hit: bool
    victim_line: Optional[int] = None
    victim_owner: Optional[int] = None


class Cache:
    """A single set-associative LRU cache, optionally way-partitioned by app."""

    def __init__(self, config: CacheConfig, max_apps: int = 64):
        self.config = config
        self.sets = config.sets
        self.tags = np.full((1, self.sets, config.associativity), INVALID, dtype=np.int64)
        self.owners = np.full_like(self.tags, -1)
        self.stamps = np.zeros_like(self.tags)
        self.clock = np.zeros(1, dtype=np.int64)
        self._max_apps = max_apps

    def set_index(self, address: int) -> int:
        return (address >> LINE_SHIFT) & (self.sets - 1)

    def access(self, app: int, address: int, is_write: bool = False,
               partition: Optional[WayPartition] = None) -> AccessResult:
        line = address >> LINE_SHIFT
        quota = np.zeros(self._max_apps, dtype=np.int64)
        if partition is not None:
            if app not in partition.quotas:
                raise KeyError(f"app {app} missing from the way partition")
            for a, q in partition.quotas.items():
                quota[a] = q
        hit, vline, vowner = lookup_fill(self.tags, self.owners, self.stamps, self.clock, 0,
                                         line & (self.sets - 1), line, app, quota,
                                         partition is not None)
        if hit or vline < 0:
            return AccessResult(bool(hit))
        return AccessResult(False, int(vline) << LINE_SHIFT, int(vowner))

    def contains(self, address: int) -> bool:
        line = address >> LINE_SHIFT
        return bool((self.tags[0, line & (self.sets - 1)] == line).any())

    def lines_of(self, app: int, set_index: int) -> List[int]:
        mask = self.owners[0, set_index] == app
        return sorted(int(t) << LINE_SHIFT for t in self.tags[0, set_index][mask])


class AtsOutcome(Enum):
    SAMPLED_HIT = "sampled-hit"
    SAMPLED_MISS = "sampled-miss"
    NOT_SAMPLED = "not-sampled"


class AuxiliaryTagStore:
    """Tag-only shadow of the LLC for one application, on sampled sets only.

    Keeps hit/miss counts and a histogram of LRU stack distances so the hit
    count for any way allocation n is ``stack_hist[1:n+1].sum()``.
    """

    def __init__(self, owner: int, llc: CacheConfig, sampled_sets: Optional[int] = 64):
        self.owner = owner
        self.set_count = llc.sets
        self.associativity = llc.associativity
        self.sampled = sampled_set_indices(self.set_count, sampled_sets)
        self._map = sample_map(self.set_count, sampled_sets)
        self.tags = np.full((1, len(self.sampled), llc.associativity), INVALID, dtype=np.int64)
        self.stamps = np.zeros_like(self.tags)
        self.clock = np.zeros(1, dtype=np.int64)
        self.hits = 0
        self.misses = 0
        self.stack_hist = np.zeros(llc.associativity + 1, dtype=np.int64)

    def access(self, address: int) -> AtsOutcome:
        line = address >> LINE_SHIFT
        slot = self._map[line & (self.set_count - 1)]
        if slot < 0:
            return AtsOutcome.NOT_SAMPLED
        depth = ats_lookup(self.tags, self.stamps, self.clock, 0, slot, line)
        self.stack_hist[depth] += 1
        if depth:
            self.hits += 1
            return AtsOutcome.SAMPLED_HIT
        self.misses += 1
        return AtsOutcome.SAMPLED_MISS

    def hits_with_ways(self, n: int) -> int:
        return int(self.stack_hist[1:n + 1].sum())

    def stats(self) -> "AtsSampleStats":
        return AtsSampleStats.from_counts(self.hits, self.hits + self.misses)


@dataclass(frozen=True)
class AtsSampleStats:
    ats_hit_fraction: float
    ats_miss_fraction: float

    @classmethod
    def from_counts(cls, hits: int, accesses: int) -> "AtsSampleStats":
        if accesses <= 0:
            return cls(0.0, 0.0)
        f = hits / accesses
        return cls(f, 1.0 - f)


class ScaledAtsCounts(NamedTuple):
    epoch_ats_hits: int
    epoch_ats_misses: int


def scale_ats_counts(stats: AtsSampleStats, epoch_accesses: int) -> ScaledAtsCounts:
    """Extrapolate sampled ATS fractions to all accesses (round half to even)."""
    hits = round(stats.ats_hit_fraction * epoch_accesses)
    hits = min(max(hits, 0), epoch_accesses)
    return ScaledAtsCounts(hits, epoch_accesses - hits)
