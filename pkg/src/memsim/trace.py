"""Per-application memory traces: format, parsing, and a synthetic generator.

A trace file is UTF-8 text with one record per line::

    <gap_instructions> <0x-hex-address> <R|W>

``gap_instructions`` non-memory instructions precede the access. Lines starting
with ``#`` and blank lines are ignored.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, TextIO, Union

import numpy as np

from .errors import TraceParseError
from .rng import splitmix64_block, to_unit

MAX_ADDRESS = 1 << 48


class TraceRecord(NamedTuple):
    gap_instructions: int
    address: int
    is_write: bool


class Trace:
    """Columnar record sequence backed by numpy arrays.

    Behaves like a read-only sequence of :class:`TraceRecord`.
    """

    def __init__(self, gap, address, is_write):
        self.gap = np.ascontiguousarray(gap, dtype=np.int64)
        self.address = np.ascontiguousarray(address, dtype=np.int64)
        self.is_write = np.ascontiguousarray(is_write, dtype=np.bool_)
        if not (len(self.gap) == len(self.address) == len(self.is_write)):
            raise ValueError("column lengths differ")

    @classmethod
    def from_records(cls, records: Iterable[TraceRecord]) -> "Trace":
        recs = list(records)
        return cls(
            [r[0] for r in recs], [r[1] for r in recs], [bool(r[2]) for r in recs]
        )

    def __len__(self) -> int:
        return len(self.gap)

    def __getitem__(self, i: int) -> TraceRecord:
        return TraceRecord(int(self.gap[i]), int(self.address[i]), bool(self.is_write[i]))

    def __iter__(self) -> Iterator[TraceRecord]:
        for g, a, w in zip(self.gap.tolist(), self.address.tolist(), self.is_write.tolist()):
            yield TraceRecord(g, a, w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            try:
                other = Trace.from_records(other)
            except Exception:
                return NotImplemented
        return (
            np.array_equal(self.gap, other.gap)
            and np.array_equal(self.address, other.address)
            and np.array_equal(self.is_write, other.is_write)
        )

    def __repr__(self) -> str:
        return f"Trace({len(self)} records)"

    @property
    def instructions(self) -> int:
        """Total instructions (gaps plus one per memory access)."""
        return int(self.gap.sum()) + len(self)

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for arr in (self.gap, self.address, self.is_write.astype(np.uint8)):
            h.update(arr.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SyntheticWorkloadSpec:
    """Streaming microbenchmark: walk ``footprint_bytes`` by ``stride_bytes``.

    ``reuse_fraction`` of the accesses (picked by the PRNG) instead touch a
    random line of the first ``hot_bytes`` of the footprint.
    """

    footprint_bytes: int = 64 * 1024 * 1024
    stride_bytes: int = 64
    compute_gap: int = 10
    record_count: int = 100_000
    reuse_fraction: float = 0.0
    seed: int = 1
    hot_bytes: int = 16 * 1024
    line_bytes: int = 64

    def validate(self) -> None:
        if self.footprint_bytes <= 0:
            raise ValueError("footprint_bytes must be positive")
        if self.stride_bytes < 1:
            raise ValueError("stride_bytes must be >= 1")
        if self.footprint_bytes < self.stride_bytes:
            raise ValueError("footprint_bytes must be >= stride_bytes")
        if not 0.0 <= self.reuse_fraction <= 1.0:
            raise ValueError("reuse_fraction must lie in [0, 1]")
        if self.compute_gap < 0 or self.record_count < 0:
            raise ValueError("compute_gap and record_count must be >= 0")
        if self.hot_bytes < 1:
            raise ValueError("hot_bytes must be >= 1")


def generate_trace(spec: SyntheticWorkloadSpec) -> Trace:
    spec.validate()
    n = spec.record_count
    gap = np.full(n, spec.compute_gap, dtype=np.int64)
    writes = np.zeros(n, dtype=np.bool_)
    if spec.reuse_fraction <= 0.0 or n == 0:
        pos = np.arange(n, dtype=np.int64)
        addr = (pos * spec.stride_bytes) % spec.footprint_bytes
        return Trace(gap, addr, writes)

    # two draws per record: reuse decision, then hot-line choice
    draws = splitmix64_block(spec.seed, 2 * n)
    is_hot = to_unit(draws[0::2]) < spec.reuse_fraction
    hot_span = min(spec.hot_bytes, spec.footprint_bytes)
    hot_lines = max(1, hot_span // spec.line_bytes)
    hot_addr = (draws[1::2] % np.uint64(hot_lines)).astype(np.int64) * spec.line_bytes
    stream_pos = np.cumsum(~is_hot) - 1  # stream advances only on non-hot records
    stream_addr = (stream_pos * spec.stride_bytes) % spec.footprint_bytes
    addr = np.where(is_hot, hot_addr, stream_addr)
    return Trace(gap, addr, writes)


def trace_mpki(records) -> float:
    """Memory accesses per kilo-instruction at trace level (before any cache)."""
    tr = records if isinstance(records, Trace) else Trace.from_records(records)
    if len(tr) == 0:
        return 0.0
    return 1000.0 * len(tr) / tr.instructions


def parse_trace(stream: Union[TextIO, str, Iterable[str]]) -> Trace:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    gaps, addrs, writes = [], [], []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TraceParseError(lineno, f"expected 3 fields, got {len(parts)}")
        g, a, kind = parts
        try:
            gap = int(g, 10)
        except ValueError:
            raise TraceParseError(lineno, f"bad gap {g!r}") from None
        if gap < 0:
            raise TraceParseError(lineno, f"negative gap {gap}")
        if not a.lower().startswith("0x"):
            raise TraceParseError(lineno, f"address {a!r} is not 0x-hex")
        try:
            addr = int(a, 16)
        except ValueError:
            raise TraceParseError(lineno, f"bad address {a!r}") from None
        if addr > MAX_ADDRESS:
            raise TraceParseError(lineno, f"address {a} exceeds 2^48")
        if kind not in ("R", "W"):
            raise TraceParseError(lineno, f"bad access type {kind!r}")
        gaps.append(gap)
        addrs.append(addr)
        writes.append(kind == "W")
    return Trace(gaps, addrs, writes)


def serialize_trace(records) -> str:
    out = io.StringIO()
    write_trace(records, out)
    return out.getvalue()


def write_trace(records, stream: TextIO) -> None:
    tr = records if isinstance(records, Trace) else Trace.from_records(records)
    kinds = np.where(tr.is_write, "W", "R")
    for g, a, k in zip(tr.gap.tolist(), tr.address.tolist(), kinds.tolist()):
        stream.write(f"{g} {a:#x} {k}\n")


def load_trace(path) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh)
