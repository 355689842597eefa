import pytest
from hypothesis import given, settings, strategies as st

from memsim.errors import TraceParseError
from memsim.rng import SplitMix64, splitmix64_block, to_unit
from memsim.trace import (TraceRecord, SyntheticWorkloadSpec, generate_trace,
                          load_trace, parse_trace, serialize_trace, trace_mpki, write_trace)


def test_splitmix_reference_outputs():
    # published reference outputs for seed 0
    r = SplitMix64(0)
    assert [r.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_splitmix_block_matches_scalar():
    r = SplitMix64(12345)
    ref = [r.next_u64() for _ in range(50)]
    assert splitmix64_block(12345, 50).tolist() == ref
    r = SplitMix64(7)
    u = [r.random() for _ in range(20)]
    assert to_unit(splitmix64_block(7, 20)).tolist() == u
    assert all(0.0 <= x < 1.0 for x in u)


def test_pure_stride_walk():
    tr = generate_trace(SyntheticWorkloadSpec(footprint_bytes=64 * 1024, stride_bytes=64,
                                              compute_gap=10, record_count=3, seed=1))
    assert list(tr) == [TraceRecord(10, 0x0, False), TraceRecord(10, 0x40, False),
                        TraceRecord(10, 0x80, False)]


def test_empty_and_wraparound():
    assert len(generate_trace(SyntheticWorkloadSpec(record_count=0))) == 0
    tr = generate_trace(SyntheticWorkloadSpec(footprint_bytes=256, stride_bytes=64,
                                              record_count=6))
    assert [r.address for r in tr] == [0, 64, 128, 192, 0, 64]


def test_zero_footprint_rejected():
    with pytest.raises(ValueError):
        generate_trace(SyntheticWorkloadSpec(footprint_bytes=0))
    with pytest.raises(ValueError):
        SyntheticWorkloadSpec(reuse_fraction=1.5).validate()


def test_mpki_about_one():
    tr = generate_trace(SyntheticWorkloadSpec(compute_gap=999, record_count=10000))
    assert trace_mpki(tr) == pytest.approx(1.0)


def test_mpki_monotone_in_gap():
    vals = [trace_mpki(generate_trace(SyntheticWorkloadSpec(compute_gap=g, record_count=100)))
            for g in (0, 1, 5, 50, 500)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_reuse_fraction_deterministic_and_hot():
    spec = SyntheticWorkloadSpec(reuse_fraction=0.5, record_count=5000, seed=9,
                                 hot_bytes=4096)
    a, b = generate_trace(spec), generate_trace(spec)
    assert a == b
    hot = sum(1 for r in a if r.address < 4096)
    # about half the draws land in the hot region, plus the first stream lines
    assert 2200 < hot < 2900
    assert generate_trace(SyntheticWorkloadSpec(reuse_fraction=0.5, record_count=5000,
                                                 seed=10, hot_bytes=4096)) != a


def test_parse_examples():
    assert list(parse_trace("10 0x1f40 R\n")) == [TraceRecord(10, 0x1F40, False)]
    assert list(parse_trace("# comment\n0 0x0 W\n")) == [TraceRecord(0, 0, True)]
    with pytest.raises(TraceParseError) as e:
        parse_trace("10 0x1f40 X\n")
    assert e.value.line == 1


@pytest.mark.parametrize("text,line", [
    ("1 0x0 R\n-1 0x0 R\n", 2),
    ("1 zz R\n", 1),
    ("\n\n1 0x0\n", 3),
    ("1 0x1000000000001 R\n", 1),
])
def test_parse_rejections(text, line):
    with pytest.raises(TraceParseError) as e:
        parse_trace(text)
    assert e.value.line == line


def test_serialize_examples():
    assert serialize_trace([TraceRecord(10, 0x1F40, False)]) == "10 0x1f40 R\n"
    assert serialize_trace([]) == ""


records = st.lists(st.builds(TraceRecord, st.integers(0, 10 ** 6),
                             st.integers(0, (1 << 48) - 1), st.booleans()), max_size=40)


@settings(max_examples=60, deadline=None)
@given(records)
def test_round_trip(recs):
    text = serialize_trace(recs)
    assert list(parse_trace(text)) == recs
    assert serialize_trace(parse_trace(text)) == text


def test_file_round_trip(tmp_path):
    tr = generate_trace(SyntheticWorkloadSpec(record_count=50, reuse_fraction=0.3))
    p = tmp_path / "t.trace"
    with open(p, "w") as f:
        write_trace(tr, f)
    assert load_trace(p) == tr
    assert load_trace(p).digest() == tr.digest()
