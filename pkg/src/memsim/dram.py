"""DDR3-style main memory: organisation, address interleaving, bank timing.

Address layouts (block offset is always the low 6 bits; ``cols`` is the number
of 64-byte blocks in a row, fields are peeled off low-to-high):

row          block -> column | bank | rank | channel | row
cache_block  block -> channel | bank | rank | column | row
sub_row(k)   block -> offset-in-stripe (k blocks) | bank | channel | rank |
             stripe-in-row | row, and column = stripe-in-row * k + offset

Worked examples with 1 channel, 1 rank, 8 banks, 8 KiB rows::

    row          0x0000 -> bank 0 row 0 col 0;  0x2000 -> bank 1 row 0 col 0
    cache_block  0x0000 -> bank 0;              0x0040 -> bank 1
    sub_row(4)   0x0000..0x00ff -> bank 0;      0x0100 -> bank 1

Service is one composite step per request: row hit tCL+burst, closed bank
tRCD+tCL+burst, conflict tRP+tRCD+tCL+burst (precharge held off until tRAS
after the previous activation).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from numba import njit

LINE_SHIFT = 6
LINE_BYTES = 1 << LINE_SHIFT

ROW_INTERLEAVE = 0
BLOCK_INTERLEAVE = 1
SUBROW_INTERLEAVE = 2
INTERLEAVINGS = {"row": ROW_INTERLEAVE, "cache_block": BLOCK_INTERLEAVE, "sub_row": SUBROW_INTERLEAVE}

ROW_HIT = 0
ROW_CLOSED = 1
ROW_CONFLICT = 2

NO_ROW = -1
NEVER = -(1 << 40)


@dataclass
class DramTiming:
    tRCD: int = 8
    tRP: int = 8
    tCL: int = 8
    tCCD: int = 4
    tRAS: int = 20
    burst_cycles: int = 4


@dataclass
class Interleaving:
    kind: str = "row"
    blocks_per_stripe: int = 4


@dataclass
class DramConfig:
    channels: int = 1
    ranks_per_channel: int = 1
    banks_per_rank: int = 8
    row_bytes: int = 8192
    timing: DramTiming = field(default_factory=DramTiming)
    interleaving: Interleaving = field(default_factory=Interleaving)

    @property
    def blocks_per_row(self) -> int:
        return self.row_bytes // LINE_BYTES

    @property
    def banks_per_channel(self) -> int:
        return self.ranks_per_channel * self.banks_per_rank

    def problems(self, prefix: str = "dram"):
        out = []
        for name in ("channels", "ranks_per_channel", "banks_per_rank"):
            v = getattr(self, name)
            if v < 1 or v & (v - 1):
                out.append((f"{prefix}.{name}", "must be a positive power of two"))
        if self.row_bytes < LINE_BYTES or self.row_bytes & (self.row_bytes - 1):
            out.append((f"{prefix}.row_bytes", "must be a power of two >= 64"))
        for name, v in vars(self.timing).items():
            if v < 1:
                out.append((f"{prefix}.timing.{name}", "must be >= 1"))
        il = self.interleaving
        if il.kind not in INTERLEAVINGS:
            out.append((f"{prefix}.interleaving.kind", f"unknown {il.kind!r}"))
        elif il.kind == "sub_row":
            k = il.blocks_per_stripe
            if k < 1 or k & (k - 1) or k > self.blocks_per_row:
                out.append((f"{prefix}.interleaving.blocks_per_stripe",
                            "must be a power of two no larger than a row"))
        return out


class AddressFields(NamedTuple):
    channel: int
    rank: int
    bank: int
    row: int
    column: int


@njit(cache=True)
def decompose(addr, kind, channels, ranks, banks, cols, stripe):
    """Return (channel, rank, bank, row, column) for a byte address."""
    block = addr >> 6
    if kind == 0:  # row
        col = block % cols
        x = block // cols
        bank = x % banks
        x //= banks
        rank = x % ranks
        x //= ranks
        ch = x % channels
        row = x // channels
    elif kind == 1:  # cache block
        ch = block % channels
        x = block // channels
        bank = x % banks
        x //= banks
        rank = x % ranks
        x //= ranks
        col = x % cols
        row = x // cols
    else:  # sub-row stripes
        off = block % stripe
        s = block // stripe
        bank = s % banks
        x = s // banks
        ch = x % channels
        x //= channels
        rank = x % ranks
        x //= ranks
        per_row = cols // stripe
        col = (x % per_row) * stripe + off
        row = x // per_row
    return ch, rank, bank, row, col


def map_address(address: int, config: DramConfig) -> AddressFields:
    il = config.interleaving
    return AddressFields(*decompose(
        int(address), INTERLEAVINGS[il.kind], config.channels, config.ranks_per_channel,
        config.banks_per_rank, config.blocks_per_row, il.blocks_per_stripe,
    ))


@njit(cache=True)
def service(open_row, activated_at, row, now, tRCD, tRP, tCL, tRAS, burst):
    """Composite service of one request at ``now``.

    Returns (completion, outcome, new_activated_at).
    """
    if open_row == row:
        return now + tCL + burst, 0, activated_at
    if open_row < 0:
        return now + tRCD + tCL + burst, 1, now
    pre = now
    if activated_at + tRAS > pre:
        pre = activated_at + tRAS
    return pre + tRP + tRCD + tCL + burst, 2, pre + tRP


@njit(cache=True)
def bank_ready(busy_until, last_column_issue, now, tCCD):
    return busy_until <= now and now - last_column_issue >= tCCD


@dataclass
class BankState:
    open_row: Optional[int] = None
    busy_until: int = 0
    activated_at: int = NEVER


@dataclass
class ChannelState:
    last_column_issue: int = NEVER


@dataclass
class MemRequest:
    app: int
    address: int
    is_write: bool = False
    channel: int = 0
    rank: int = 0
    bank: int = 0
    row: int = 0
    column: int = 0
    arrival_cycle: int = 0
    service_complete_cycle: Optional[int] = None
    seq: int = 0

    @classmethod
    def for_address(cls, app, address, config: DramConfig, arrival_cycle=0, is_write=False, seq=0):
        f = map_address(address, config)
        return cls(app, address, is_write, f.channel, f.rank, f.bank, f.row, f.column,
                   arrival_cycle, None, seq)

    def bank_index(self, config: DramConfig) -> int:
        """Bank number within its channel (rank-major)."""
        return self.rank * config.banks_per_rank + self.bank


class ServiceResult(NamedTuple):
    completion: int
    was_row_hit: bool
    outcome: int


def can_issue(bank: BankState, channel: ChannelState, now: int, timing: DramTiming) -> bool:
    return bool(bank_ready(bank.busy_until, channel.last_column_issue, now, timing.tCCD))


def service_latency(bank: BankState, req: MemRequest, now: int, timing: DramTiming,
                    channel: Optional[ChannelState] = None) -> ServiceResult:
    """Serve ``req`` on ``bank`` at ``now`` and update the bank (and channel)."""
    last = channel.last_column_issue if channel is not None else NEVER
    assert bank_ready(bank.busy_until, last, now, timing.tCCD), "bank or channel busy"
    open_row = NO_ROW if bank.open_row is None else bank.open_row
    done, outcome, act = service(open_row, bank.activated_at, req.row, now, timing.tRCD,
                                 timing.tRP, timing.tCL, timing.tRAS, timing.burst_cycles)
    bank.open_row = req.row
    bank.busy_until = done
    bank.activated_at = act
    if channel is not None:
        channel.last_column_issue = now
    req.service_complete_cycle = done
    return ServiceResult(done, outcome == ROW_HIT, outcome)
