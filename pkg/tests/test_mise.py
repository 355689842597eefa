import math

import pytest

from memsim.errors import ConfigError, DegenerateDenominator, NoHighPriorityEpochs, NoProgress
from memsim.mise import (BandwidthAllocation, MiseConfig, MiseCounters, assign_epoch,
                         compute_arsr, compute_srsr, estimate_interval, estimate_slowdown,
                         record_interference_cycle)
from memsim.rng import SplitMix64


def freq(weights, n, seed):
    rng = SplitMix64(seed)
    alloc = BandwidthAllocation(weights)
    picks = [assign_epoch(alloc, rng) for _ in range(n)]
    return picks.count(0) / n


def test_lottery_single_app():
    rng = SplitMix64(1)
    assert {assign_epoch(BandwidthAllocation({7: 1.0}), rng) for _ in range(100)} == {7}


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_lottery_frequencies(seed):
    n = 100_000
    for p in (0.75, 0.5):
        f = freq([p, 1 - p], n, seed)
        assert abs(f - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_lottery_zero_weight_never_drawn():
    rng = SplitMix64(4)
    alloc = BandwidthAllocation([0.0, 1.0, 0.0])
    assert {assign_epoch(alloc, rng) for _ in range(1000)} == {1}


def test_allocation_validation():
    with pytest.raises(ValueError):
        BandwidthAllocation([0.5, 0.6])
    with pytest.raises(ValueError):
        BandwidthAllocation([1.5, -0.5])
    assert BandwidthAllocation.equal(4)[3] == 0.25


def test_interference_cycle():
    c = MiseCounters()
    assert record_interference_cycle(c, True, 1, 0)
    assert not record_interference_cycle(c, False, 1, 0)
    assert not record_interference_cycle(c, True, 0, 0)
    assert c.interference_cycles == 1


def test_srsr():
    assert compute_srsr(MiseCounters(requests_served=5000), 5_000_000) == 0.001
    assert compute_srsr(MiseCounters(), 5_000_000) == 0.0
    assert compute_srsr(MiseCounters(requests_served=10000), 5_000_000) == 0.002


def test_arsr():
    assert compute_arsr(MiseCounters(hpe_count=1, hpe_requests=50), 10000) == 0.005
    c = MiseCounters(hpe_count=1, hpe_requests=50, interference_cycles=2000)
    assert compute_arsr(c, 10000) == 50 / 8000
    with pytest.raises(NoHighPriorityEpochs):
        compute_arsr(MiseCounters(), 10000)
    with pytest.raises(DegenerateDenominator):
        compute_arsr(MiseCounters(hpe_count=1, interference_cycles=10000), 10000)


def test_slowdown_equations():
    assert estimate_slowdown(0.02, 0.01, 1.0) == 2.0
    assert estimate_slowdown(0.03, 0.01, 0.2) == pytest.approx(1.4)
    for a in (0.0, 0.3, 0.69, 0.7, 1.0):
        assert estimate_slowdown(0.004, 0.004, a) == pytest.approx(1.0)
    with pytest.raises(NoProgress):
        estimate_slowdown(0.01, 0.0, 0.5)


def test_estimate_interval_carries_forward():
    cfg = MiseConfig(interval_cycles=100_000, epoch_cycles=10_000)
    c = MiseCounters(requests_served=100, hpe_count=2, hpe_requests=60,
                     stall_cycles=90_000, total_cycles=100_000)
    e = estimate_interval(0, 3, c, cfg, None)
    assert e.slowdown == pytest.approx((60 / 20000) / (100 / 100_000))
    e = estimate_interval(0, 4, MiseCounters(requests_served=5), cfg, 2.5)
    assert e.slowdown == 2.5 and "no_hpe" in e.flags
    e = estimate_interval(0, 4, MiseCounters(hpe_count=1, hpe_requests=3), cfg, None)
    assert e.slowdown is None and "no_progress" in e.flags


def test_config_validation():
    with pytest.raises(ConfigError):
        MiseConfig(interval_cycles=15_000, epoch_cycles=10_000).validate()
    MiseConfig().validate()
