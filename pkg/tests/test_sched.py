import pytest

from memsim.dram import BankState, ChannelState, DramConfig, MemRequest
from memsim.sched import (BlissState, CapState, EpochPriorityState, RequestQueue, bliss_clear,
                          bliss_select, bliss_update_state, cap_record_service, classify_intensity,
                          epoch_priority_select, frfcfs_cap_select, frfcfs_select, grouping_select)

CFG = DramConfig()


def banks(open_rows=None):
    b = [BankState() for _ in range(CFG.banks_per_channel)]
    for i, r in (open_rows or {}).items():
        b[i].open_row = r
    return b


def req(app, row, t, bank=0):
    return MemRequest(app, 0, bank=bank, row=row, arrival_cycle=t)


def queue(*reqs):
    return RequestQueue(list(reqs))


def test_frfcfs_prefers_row_hit_then_age():
    old_miss, new_hit = req(0, 9, 1), req(1, 5, 2)
    assert frfcfs_select(queue(old_miss, new_hit), banks({0: 5}), 10, CFG) is new_hit
    a, b = req(0, 5, 3), req(1, 5, 1)
    assert frfcfs_select(queue(a, b), banks({0: 5}), 10, CFG) is b
    assert frfcfs_select(queue(), banks(), 10, CFG) is None


def test_not_arrived_or_busy_bank_skipped():
    early, late = req(0, 9, 1), req(1, 5, 50)
    assert frfcfs_select(queue(early, late), banks({0: 5}), 10, CFG) is early
    bs = banks({0: 5})
    bs[0].busy_until = 20
    assert frfcfs_select(queue(early), bs, 10, CFG) is None
    # channel tCCD gate
    assert frfcfs_select(queue(early), banks(), 10, CFG, ChannelState(8)) is None


def _capped(count):
    st = CapState(cap=4)
    r = req(0, 5, 0)
    for _ in range(count):
        cap_record_service(st, r, True, CFG)
    return st


def test_cap_demotes_after_cap_hits():
    st = _capped(4)
    assert st.count(0, 0) == 4
    a_hit, b_miss = req(0, 5, 1), req(1, 9, 2)
    assert frfcfs_cap_select(queue(a_hit, b_miss), banks({0: 5}), st, 10, CFG) is b_miss
    st = _capped(3)
    assert frfcfs_cap_select(queue(a_hit, b_miss), banks({0: 5}), st, 10, CFG) is a_hit


def test_cap_never_starves():
    st = _capped(4)
    a1, a2 = req(0, 5, 2), req(0, 5, 1)
    assert frfcfs_cap_select(queue(a1, a2), banks({0: 5}), st, 10, CFG) is a2


def test_cap_resets_on_other_app_or_miss():
    st = _capped(3)
    cap_record_service(st, req(1, 5, 0), True, CFG)
    assert st.count(0, 0) == 0 and st.count(0, 1) == 1
    cap_record_service(st, req(1, 6, 0), False, CFG)
    assert st.count(0, 1) == 0


def feed(state, apps):
    hits = []
    for a in apps:
        hits.append(bliss_update_state(state, req(a, 0, 0)))
    return hits


def test_bliss_counter_examples():
    s = BlissState(blacklisting_threshold=4)
    assert feed(s, [0] * 5) == [False] * 4 + [True]
    assert s.blacklist == {0}
    s = BlissState(blacklisting_threshold=4)
    feed(s, [0, 0, 1])
    assert s.blacklist == set()
    assert s.application_id_register == 1 and s.requests_served_counter == 0
    s = BlissState(blacklisting_threshold=4)
    assert sum(feed(s, [0] * 5 + [1] + [0] * 5)) == 2


def test_bliss_clearing():
    s = BlissState()
    feed(s, [0] * 5)
    assert not bliss_clear(s, 9999)
    assert s.blacklist == {0}
    assert bliss_clear(s, 10000)
    assert s.blacklist == set()
    feed(s, [1] * 5)
    assert not bliss_clear(s, 19999) and bliss_clear(s, 20000) and s.blacklist == set()


def test_bliss_select():
    s = BlissState()
    feed(s, [0] * 5)
    a_hit, b_miss = req(0, 5, 1), req(1, 9, 2)
    assert bliss_select(queue(a_hit, b_miss), banks({0: 5}), s, 10, CFG) is b_miss
    s2 = BlissState()
    assert bliss_select(queue(a_hit, b_miss), banks({0: 5}), s2, 10, CFG) is a_hit
    a_old = req(0, 9, 0)
    assert bliss_select(queue(a_old, a_hit), banks({0: 5}), s, 10, CFG) is a_hit


def test_grouping():
    lo_miss, hi_hit = req(0, 9, 2), req(1, 5, 1)
    classes = {0: "low", 1: "high"}
    assert grouping_select(queue(lo_miss, hi_hit), banks({0: 5}), classes, 10, CFG) is lo_miss
    lo_hit = req(2, 5, 3)
    classes[2] = "low"
    assert grouping_select(queue(lo_miss, lo_hit), banks({0: 5}), classes, 10, CFG) is lo_hit
    allhigh = {0: "high", 1: "high"}
    assert grouping_select(queue(lo_miss, hi_hit), banks({0: 5}), allhigh, 10, CFG) is hi_hit
    with pytest.raises(KeyError):
        grouping_select(queue(lo_miss), banks(), {1: "low"}, 10, CFG)
    assert classify_intensity({0: 1.0, 1: 20.0}) == {0: "low", 1: "high"}


def test_epoch_priority_overlay():
    a_hit, b_miss = req(0, 5, 1), req(1, 9, 2)
    q = queue(a_hit, b_miss)
    assert epoch_priority_select(q, banks({0: 5}), EpochPriorityState(1), 10, CFG) is b_miss
    assert epoch_priority_select(q, banks({0: 5}), EpochPriorityState(2), 10, CFG) is a_hit
    assert epoch_priority_select(q, banks({0: 5}), EpochPriorityState(), 10, CFG) is a_hit
    # priority app's bank busy: work conservation serves another bank
    b_busy, a_other = req(1, 9, 0, bank=0), req(0, 3, 5, bank=1)
    bs = banks()
    bs[0].busy_until = 99
    assert epoch_priority_select(queue(b_busy, a_other), bs, EpochPriorityState(1), 10,
                                 CFG) is a_other


def test_queue_capacity():
    q = RequestQueue(capacity=1)
    q.push(req(0, 0, 0))
    with pytest.raises(OverflowError):
        q.push(req(0, 0, 0))
