"""Memory-controller request selection: FRFCFS, FRFCFS-Cap, Grouping, BLISS,
plus the highest-priority-application epoch overlay.

Every policy ranks the issuable requests of one channel (arrived, bank free)
by a lexicographic key and serves the best one. Remaining ties go to the
earlier arrival, then the lower app id, then enqueue order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from numba import njit

from .dram import NEVER, NO_ROW, BankState, ChannelState, DramConfig, MemRequest

FRFCFS = 0
FRFCFS_CAP = 1
GROUPING = 2
BLISS = 3
POLICIES = {"frfcfs": FRFCFS, "frfcfs_cap": FRFCFS_CAP, "grouping": GROUPING, "bliss": BLISS}


# request queue fields: qd[channel, slot, field]
Q_APP = 0
Q_BANK = 1      # bank within the channel (rank-major)
Q_ROW = 2
Q_READY = 3     # cycle the request reached the controller
Q_SEQ = 4       # enqueue order
Q_CORE = 5
Q_MSHR = 6
NQ = 7

# bank fields: bk[channel, bank, field]
B_OPEN = 0
B_BUSY = 1      # busy until this cycle
B_ACT = 2       # last activation cycle
B_CAP_APP = 3   # app of the current row-hit run (FRFCFS-Cap)
B_CAP_CNT = 4   # length of that run
B_MON_END = 5   # monitor copy of the last service end
NB = 6

# channel fields: chs[channel, field]
C_QLEN = 0
C_LAST = 1      # last column issue cycle
C_BL_LAST = 2   # BLISS application-id register
C_BL_CNT = 3    # BLISS requests-served counter
C_STK_LAST = 4
C_STK_LEN = 5
C_MON_LAST = 6
NCH = 7


def new_banks(channels: int, banks: int) -> np.ndarray:
    bk = np.zeros((channels, banks, NB), dtype=np.int64)
    bk[:, :, B_OPEN] = NO_ROW
    bk[:, :, B_ACT] = NEVER
    bk[:, :, B_CAP_APP] = -1
    return bk


def new_channels(channels: int) -> np.ndarray:
    chs = np.zeros((channels, NCH), dtype=np.int64)
    chs[:, C_LAST] = NEVER
    chs[:, C_BL_LAST] = -1
    chs[:, C_STK_LAST] = -1
    chs[:, C_MON_LAST] = NEVER
    return chs


@njit(cache=True)
def select(qd, ch, qlen, bk, now, policy, prio, blacklist, low_int, cap):
    """Queue slot of the request to issue on channel ``ch``, or -1.

    ``blacklist`` is indexed [channel, app], ``low_int`` by app. ``prio`` is
    the epoch's highest-priority app or -1.
    """
    best = -1
    b0 = 0
    b1 = 0
    b2 = 0
    for k in range(qlen):
        bank = qd[ch, k, Q_BANK]
        if qd[ch, k, Q_READY] > now or bk[ch, bank, B_BUSY] > now:
            continue
        app = qd[ch, k, Q_APP]
        hit = 1 if bk[ch, bank, B_OPEN] == qd[ch, k, Q_ROW] else 0
        if prio >= 0 and app == prio:
            k0 = 1
            k1 = 0
        else:
            k0 = 0
            if policy == FRFCFS_CAP:
                capped = (hit == 1 and bk[ch, bank, B_CAP_APP] == app
                          and bk[ch, bank, B_CAP_CNT] >= cap)
                k1 = 0 if capped else 1
            elif policy == GROUPING:
                k1 = low_int[app]
            elif policy == BLISS:
                k1 = 1 - blacklist[ch, app]
            else:
                k1 = 0
        if best < 0:
            better = True
        elif k0 != b0:
            better = k0 > b0
        elif k1 != b1:
            better = k1 > b1
        elif hit != b2:
            better = hit > b2
        elif qd[ch, k, Q_READY] != qd[ch, best, Q_READY]:
            better = qd[ch, k, Q_READY] < qd[ch, best, Q_READY]
        elif app != qd[ch, best, Q_APP]:
            better = app < qd[ch, best, Q_APP]
        else:
            better = qd[ch, k, Q_SEQ] < qd[ch, best, Q_SEQ]
        if better:
            best = k
            b0 = k0
            b1 = k1
            b2 = hit
    return best


@njit(cache=True)
def bliss_update(chs, blacklist, ch, app, threshold):
    """Streak bookkeeping after issuing a request of ``app`` on channel ``ch``.

    Returns True when this issue blacklisted ``app``.
    """
    if chs[ch, C_BL_LAST] == app:
        chs[ch, C_BL_CNT] += 1
    else:
        chs[ch, C_BL_CNT] = 0
        chs[ch, C_BL_LAST] = app
    if chs[ch, C_BL_CNT] >= threshold:
        blacklist[ch, app] = 1
        chs[ch, C_BL_CNT] = 0
        return True
    return False


@njit(cache=True)
def cap_update(bk, ch, bank, app, hit):
    if hit:
        if bk[ch, bank, B_CAP_APP] == app:
            bk[ch, bank, B_CAP_CNT] += 1
        else:
            bk[ch, bank, B_CAP_APP] = app
            bk[ch, bank, B_CAP_CNT] = 1
    else:
        bk[ch, bank, B_CAP_APP] = app
        bk[ch, bank, B_CAP_CNT] = 0


# --------------------------------------------------------------------------
# Python-level state objects and per-policy selection functions


@dataclass
class RequestQueue:
    requests: List[MemRequest] = field(default_factory=list)
    capacity: int = 128

    def push(self, req: MemRequest) -> None:
        if len(self.requests) >= self.capacity:
            raise OverflowError("request queue full")
        self.requests.append(req)

    def remove(self, req: MemRequest) -> None:
        self.requests.remove(req)

    def __len__(self) -> int:
        return len(self.requests)


@dataclass
class BlissState:
    blacklisting_threshold: int = 4
    clearing_interval_cycles: int = 10_000
    max_apps: int = 64

    def __post_init__(self):
        self._chs = new_channels(1)
        self._blacklist = np.zeros((1, self.max_apps), dtype=np.int64)
        self.last_clear = 0

    @property
    def application_id_register(self) -> Optional[int]:
        a = self._chs[0, C_BL_LAST]
        return None if a < 0 else int(a)

    @property
    def requests_served_counter(self) -> int:
        return int(self._chs[0, C_BL_CNT])

    @property
    def blacklist(self) -> set:
        return {int(a) for a in np.flatnonzero(self._blacklist[0])}

    def cycles_since_clear(self, now: int) -> int:
        return now - self.last_clear


@dataclass
class CapState:
    """Per-bank row-hit run tracking for FRFCFS-Cap (one channel)."""

    cap: int = 4
    banks: int = 8

    def __post_init__(self):
        self._bk = new_banks(1, self.banks)

    def count(self, bank: int, app: int) -> int:
        b = self._bk[0, bank]
        return int(b[B_CAP_CNT]) if b[B_CAP_APP] == app else 0


@dataclass
class EpochPriorityState:
    current: Optional[int] = None
    epoch_end_cycle: int = 0


def bliss_update_state(state: BlissState, issued: MemRequest) -> bool:
    return bool(bliss_update(state._chs, state._blacklist, 0, issued.app,
                             state.blacklisting_threshold))


def bliss_clear(state: BlissState, now: int) -> bool:
    """Synchronously clear every blacklist bit once a clearing interval has elapsed."""
    if now - state.last_clear >= state.clearing_interval_cycles:
        state._blacklist[:] = 0
        state.last_clear = now
        return True
    return False


def cap_record_service(cap_state: CapState, req: MemRequest, was_row_hit: bool,
                       config: DramConfig) -> None:
    cap_update(cap_state._bk, 0, req.bank_index(config), req.app, was_row_hit)


def _run_select(queue: RequestQueue, banks: Sequence[BankState], now: int, config: DramConfig,
                policy: int, channel: Optional[ChannelState] = None, prio: Optional[int] = None,
                blacklist=(), low_apps=(), cap_state: Optional[CapState] = None):
    if channel is not None and now - channel.last_column_issue < config.timing.tCCD:
        return None
    reqs = queue.requests
    if not reqs:
        return None
    nb = config.banks_per_channel
    apps = max(max(r.app for r in reqs) + 1, 1)
    qd = np.zeros((1, len(reqs), NQ), dtype=np.int64)
    for k, r in enumerate(reqs):
        qd[0, k, Q_APP] = r.app
        qd[0, k, Q_BANK] = r.bank_index(config)
        qd[0, k, Q_ROW] = r.row
        qd[0, k, Q_READY] = r.arrival_cycle
        qd[0, k, Q_SEQ] = k
    bk = cap_state._bk.copy() if cap_state is not None else new_banks(1, nb)
    for b, st in enumerate(banks):
        bk[0, b, B_OPEN] = NO_ROW if st.open_row is None else st.open_row
        bk[0, b, B_BUSY] = st.busy_until
    bl = np.zeros((1, apps), dtype=np.int64)
    for a in blacklist:
        if a < apps:
            bl[0, a] = 1
    low = np.zeros(apps, dtype=np.int64)
    for a in low_apps:
        if a < apps:
            low[a] = 1
    cap = cap_state.cap if cap_state is not None else 4
    k = select(qd, 0, len(reqs), bk, now, policy, -1 if prio is None else prio, bl, low, cap)
    return None if k < 0 else reqs[k]


def frfcfs_select(queue, banks, now, config: DramConfig, channel=None):
    return _run_select(queue, banks, now, config, FRFCFS, channel)


def frfcfs_cap_select(queue, banks, cap_state: CapState, now, config: DramConfig, channel=None):
    return _run_select(queue, banks, now, config, FRFCFS_CAP, channel, cap_state=cap_state)


def bliss_select(queue, banks, state: BlissState, now, config: DramConfig, channel=None):
    return _run_select(queue, banks, now, config, BLISS, channel, blacklist=state.blacklist)


def grouping_select(queue, banks, intensity_classes: Mapping[int, str], now,
                    config: DramConfig, channel=None):
    for r in queue.requests:
        if r.app not in intensity_classes:
            raise KeyError(f"app {r.app} has no intensity class")
    low = [a for a, c in intensity_classes.items() if c == "low"]
    return _run_select(queue, banks, now, config, GROUPING, channel, low_apps=low)


def epoch_priority_select(queue, banks, prio: EpochPriorityState, now, config: DramConfig,
                          base: str = "frfcfs", channel=None, bliss_state=None,
                          cap_state=None, intensity_classes=None):
    low = [a for a, c in (intensity_classes or {}).items() if c == "low"]
    bl = bliss_state.blacklist if bliss_state is not None else ()
    return _run_select(queue, banks, now, config, POLICIES[base], channel, prio=prio.current,
                       blacklist=bl, low_apps=low, cap_state=cap_state)


def classify_intensity(mpki: Mapping[int, float], threshold: float = 5.0) -> Dict[int, str]:
    """Grouping's two classes: MPKI above ``threshold`` is high intensity."""
    return {a: ("high" if m > threshold else "low") for a, m in mpki.items()}
