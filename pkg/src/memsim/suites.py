"""Seeded synthetic workload mixes used by the demos and the acceptance tests."""
from __future__ import annotations

from typing import List

from .rng import SplitMix64

# compute gaps from fully memory-bound to mostly compute-bound
GAPS = (0, 1, 2, 5, 10, 20, 50, 100)


def streaming_mix(seed: int, n_apps: int = 4, gaps=GAPS) -> List[dict]:
    """``n_apps`` streaming apps whose compute gaps are drawn from ``gaps``."""
    rng = SplitMix64(seed)
    apps = []
    for i in range(n_apps):
        g = gaps[rng.next_u64() % len(gaps)]
        apps.append({"synthetic": {"compute_gap": int(g), "seed": seed * 100 + i}})
    return apps


def mix_suite(count: int = 20, base_seed: int = 1, n_apps: int = 4) -> List[List[dict]]:
    return [streaming_mix(base_seed + k, n_apps) for k in range(count)]


def hog_and_victims(n_victims: int = 3) -> List[dict]:
    """One row-local streaming hog plus lighter, row-unfriendly victims.

    The hog walks sequentially (long row-hit runs); victims stride a full row
    so every access opens a new row.
    """
    apps = [{"synthetic": {"compute_gap": 0, "stride_bytes": 64}}]
    for i in range(n_victims):
        apps.append({"synthetic": {"compute_gap": 20 + 10 * i, "stride_bytes": 8192 + 64 * i}})
    return apps
