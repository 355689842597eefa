import pytest

from memsim.dram import (BankState, ChannelState, DramConfig, DramTiming, Interleaving, MemRequest,
                         can_issue, map_address, service_latency)


def cfg(kind="row", k=4, **kw):
    return DramConfig(interleaving=Interleaving(kind, k), **kw)


def test_row_interleaving_examples():
    c = cfg()
    f = map_address(0x0, c)
    assert (f.bank, f.row, f.column) == (0, 0, 0)
    f = map_address(0x2000, c)
    assert (f.bank, f.row, f.column) == (1, 0, 0)
    assert map_address(0x40, c).column == 1
    # row number advances after every bank has taken one row
    assert map_address(8 * 0x2000, c).row == 1


def test_cache_block_interleaving():
    c = cfg("cache_block")
    assert map_address(0x0, c).bank == 0
    assert map_address(0x40, c).bank == 1
    assert map_address(8 * 0x40, c) == map_address(0x0, c)._replace(column=1)


def test_sub_row_interleaving():
    c = cfg("sub_row", 4)
    assert {map_address(a, c).bank for a in range(0, 0x100, 0x40)} == {0}
    assert map_address(0x100, c).bank == 1
    # the 9th stripe wraps to bank 0, next stripe within the same row
    f = map_address(8 * 0x100, c)
    assert (f.bank, f.row, f.column) == (0, 0, 4)


def test_multi_channel_fields():
    c = cfg(channels=2)
    assert map_address(8 * 0x2000, c).channel == 1
    assert map_address(0x40, cfg("cache_block", channels=2)).channel == 1


@pytest.mark.parametrize("kind", ["row", "cache_block", "sub_row"])
def test_mapping_is_injective(kind):
    c = cfg(kind, 4, channels=2, ranks_per_channel=2, banks_per_rank=4, row_bytes=1024)
    seen = set()
    for blk in range(4096):
        seen.add(tuple(map_address(blk * 64, c)))
    assert len(seen) == 4096


def test_service_latencies():
    t = DramTiming()
    bank = BankState()
    req = MemRequest(0, 0, row=5)
    r = service_latency(bank, req, 100, t)
    assert (r.completion, r.was_row_hit) == (120, False)
    r = service_latency(bank, MemRequest(0, 0, row=5), 120, t)
    assert (r.completion - 120, r.was_row_hit) == (12, True)
    r = service_latency(bank, MemRequest(0, 0, row=6), 132, t)
    assert r.completion - 132 == 28
    assert bank.open_row == 6 and bank.busy_until == 160
    assert 28 / 12 == pytest.approx(7 / 3)


def test_conflict_respects_tras():
    t = DramTiming()
    bank = BankState()
    service_latency(bank, MemRequest(0, 0, row=1), 0, t)  # activated at 0, done 20
    r = service_latency(bank, MemRequest(0, 0, row=2), 20, t)
    assert r.completion == 48
    bank2 = BankState(open_row=1, activated_at=0)
    # precharge held until tRAS=20 after activation
    assert service_latency(bank2, MemRequest(0, 0, row=2), 5, t).completion == 20 + 28


def test_can_issue_tccd():
    t = DramTiming()
    ch = ChannelState(last_column_issue=10)
    assert not can_issue(BankState(), ch, 13, t)
    assert can_issue(BankState(), ch, 14, t)
    assert can_issue(BankState(), ChannelState(), 0, t)
    assert not can_issue(BankState(busy_until=50), ChannelState(), 49, t)


def test_request_helpers_and_problems():
    c = cfg()
    r = MemRequest.for_address(2, 0x2000, c, arrival_cycle=7)
    assert (r.app, r.bank, r.arrival_cycle) == (2, 1, 7)
    assert r.bank_index(c) == 1
    assert c.problems() == []
    bad = cfg("sub_row", 3, channels=3)
    paths = [p for p, _ in bad.problems()]
    assert "dram.channels" in paths and "dram.interleaving.blocks_per_stripe" in paths
