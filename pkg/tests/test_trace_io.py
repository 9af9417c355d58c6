import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snoopsim import MemoryRef, Op, TraceFormatError
from snoopsim._backend import KERNELS
from snoopsim.trace_io import dumps, max_core, parse_line, read_chunks, read_trace, write_line, write_trace

refs = st.builds(MemoryRef, st.sampled_from([Op.LOAD, Op.STORE]), st.integers(0, 15), st.integers(0, 2**64 - 1))


def test_parse_load():
    assert parse_line("L 3 0x7fff1234\n") == MemoryRef(Op.LOAD, 3, 0x7FFF1234)


def test_parse_uppercase_hex():
    assert parse_line("S 15 0xABCdef") == MemoryRef(Op.STORE, 15, 0xABCDEF)


@pytest.mark.parametrize("line", ["# warmup done\n", "\n", "   \n", "#"])
def test_comment_and_blank_skip(line):
    assert parse_line(line) is None


@pytest.mark.parametrize("line, column, fragment", [
    ("X 3 0x10", 1, "opcode"),
    ("L 16 0x10", 3, "range"),
    ("L 03 0x10", 3, "core"),
    ("L a 0x10", 3, "core"),
    ("L 3 10", 5, "0x"),
    ("L 3 0xzz", 5, "hex"),
    ("L 3 0x", 5, "hex"),
    ("L 3", 1, "fields"),
    ("L  3 0x10", 1, "fields"),
    ("L 3 0x10 extra", 1, "fields"),
    ("L 3 0x1" + "0" * 16, 5, "64 bits"),
])
def test_parse_errors(line, column, fragment):
    with pytest.raises(TraceFormatError) as info:
        parse_line(line)
    assert info.value.column == column
    assert fragment in info.value.reason


def test_write_line_examples():
    assert write_line(MemoryRef(Op.STORE, 0, 0x40)) == "S 0 0x40\n"
    assert write_line(MemoryRef(Op.LOAD, 15, 0x0)) == "L 15 0x0\n"


@settings(max_examples=2000)
@given(refs)
def test_round_trip(ref):
    assert parse_line(write_line(ref)) == ref


def test_round_trip_bulk(tmp_path):
    import random
    rng = random.Random(1)
    data = [MemoryRef(Op(rng.randrange(2)), rng.randrange(16), rng.getrandbits(64)) for _ in range(100_000)]
    path = tmp_path / "rt.trace"
    assert write_trace(path, data, header=["bulk"]) == len(data)
    assert list(read_trace(path)) == data


def test_read_trace_reports_line_numbers():
    src = io.StringIO("# h\nL 0 0x0\n\nQ 1 0x4\n")
    with pytest.raises(TraceFormatError) as info:
        list(read_trace(src))
    assert info.value.lineno == 4
    assert "line 4, column 1" in str(info.value)


def _flatten(chunks):
    out = []
    for ops, cores, addrs in chunks:
        out += [MemoryRef(Op(o), c, a) for o, c, a in zip(ops, cores, addrs)]
    return out


@pytest.mark.parametrize("chunk", [1, 3, 1 << 16])
def test_read_chunks_matches_read_trace(tmp_path, backend, chunk):
    text = "# x\nL 0 0x0\nS 1 0xFF\n\nL 15 0xffffffffffffffff\r\nS 2 0x40"
    path = tmp_path / "c.trace"
    path.write_bytes(text.encode())
    # CR before the newline is not part of the grammar
    with pytest.raises(TraceFormatError) as info:
        _flatten(read_chunks(path, chunk, backend=backend))
    assert info.value.lineno == 5
    path.write_text(text.replace("\r", ""))
    got = _flatten(read_chunks(path, chunk, backend=backend))
    assert got == list(read_trace(path))
    assert len(got) == 4


def test_read_chunks_rejects_core_beyond_count(tmp_path, backend):
    path = tmp_path / "c.trace"
    path.write_text("L 0 0x0\nL 1 0x0\nL 2 0x0\n")
    with pytest.raises(TraceFormatError) as info:
        _flatten(read_chunks(path, num_cores=2, backend=backend))
    assert info.value.lineno == 3


def test_read_chunks_overlong_hex_falls_back(tmp_path, backend):
    path = tmp_path / "c.trace"
    path.write_text("L 0 0x00000000000000000001\nL 0 0x1" + "0" * 16 + "\n")
    with pytest.raises(TraceFormatError) as info:
        _flatten(read_chunks(path, backend=backend))
    assert info.value.lineno == 2


@settings(max_examples=100, deadline=None)
@given(st.lists(refs, max_size=50), st.integers(1, 8))
def test_scanner_agrees_with_regex(tmp_path_factory, data, chunk):
    path = tmp_path_factory.mktemp("s") / "t.trace"
    write_trace(path, data, header=["h"])
    for backend in sorted(KERNELS):
        assert _flatten(read_chunks(path, chunk, backend=backend)) == data


def test_non_utf8_line_is_input_error(tmp_path, backend):
    path = tmp_path / "u.trace"
    path.write_bytes(b"L 0 0x0\nL \xff 0x0\n")
    with pytest.raises((TraceFormatError, UnicodeDecodeError)):
        _flatten(read_chunks(path, backend=backend))


def test_max_core_and_dumps():
    data = [MemoryRef(Op.LOAD, 3, 0), MemoryRef(Op.STORE, 7, 64)]
    assert dumps(data) == "L 3 0x0\nS 7 0x40\n"
    assert max_core(io.StringIO(dumps(data))) == 7
    assert max_core(io.StringIO("# only a comment\n")) == -1
