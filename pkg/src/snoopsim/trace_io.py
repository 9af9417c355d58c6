"""Text trace format: one ``<op> <core> <addr>`` record per line.

``op`` is ``L`` or ``S``, ``core`` is decimal 0-15, ``addr`` is ``0x``-prefixed
hex below 2**64.  Lines starting with ``#`` and blank lines are skipped.
"""

from __future__ import annotations

import io
import os
import re
from array import array
from typing import IO, Iterable, Iterator, Optional, Union

from ._backend import scanner
from .core import ADDR_LIMIT, MAX_CORES, MemoryRef, Op
from .errors import TraceFormatError

_RECORD = re.compile(r"([LS]) (1[0-5]|[0-9]) 0x([0-9a-fA-F]+)")
_OPS = {"L": Op.LOAD, "S": Op.STORE}

Source = Union[str, os.PathLike, IO[str], Iterable[str]]


def _diagnose(line: str) -> TraceFormatError:
    """Explain why ``line`` (newline stripped) failed the fast match."""
    parts = line.split(" ")
    if len(parts) != 3:
        return TraceFormatError(f"expected 3 space-separated fields, got {len(parts)}", 1, line=line)
    op, core, addr = parts
    col_core = len(op) + 2
    col_addr = col_core + len(core) + 1
    if op not in _OPS:
        return TraceFormatError(f"unknown opcode {op!r}", 1, line=line)
    if not (core.isascii() and core.isdigit()) or (len(core) > 1 and core[0] == "0"):
        return TraceFormatError(f"malformed core id {core!r}", col_core, line=line)
    if int(core) >= MAX_CORES:
        return TraceFormatError(f"core {core} out of range 0-{MAX_CORES - 1}", col_core, line=line)
    if not addr.startswith("0x"):
        return TraceFormatError(f"address {addr!r} lacks 0x prefix", col_addr, line=line)
    return TraceFormatError(f"malformed hex address {addr!r}", col_addr, line=line)


def parse_line(line: str) -> Optional[MemoryRef]:
    """Parse one line; ``None`` for comments and blank lines."""
    if line.endswith("\n"):
        line = line[:-1]
    if not line.strip() or line.startswith("#"):
        return None
    m = _RECORD.fullmatch(line)
    if m is None:
        raise _diagnose(line)
    addr = int(m.group(3), 16)
    if addr >= ADDR_LIMIT:
        raise TraceFormatError("address exceeds 64 bits", len(m.group(1)) + len(m.group(2)) + 3, line=line)
    return MemoryRef(_OPS[m.group(1)], int(m.group(2)), addr)


def write_line(ref: MemoryRef) -> str:
    op = "S" if ref.op else "L"
    return f"{op} {ref.core} {ref.addr:#x}\n"


def _open_lines(source: Source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline="\n")
    return source


def read_trace(source: Source) -> Iterator[MemoryRef]:
    """Stream MemoryRefs from a path, open file, or iterable of lines."""
    f = _open_lines(source)
    try:
        for lineno, line in enumerate(f, 1):
            try:
                ref = parse_line(line)
            except TraceFormatError as exc:
                raise _located(exc, lineno) from None
            if ref is not None:
                yield ref
    finally:
        if f is not source:
            f.close()


def _located(exc: TraceFormatError, lineno: int) -> TraceFormatError:
    exc.lineno = lineno
    exc.args = (f"line {lineno}, column {exc.column}: {exc.reason}",)
    return exc


def _checked(line: str, lineno: int, num_cores: int) -> Optional[MemoryRef]:
    try:
        ref = parse_line(line)
    except TraceFormatError as exc:
        raise _located(exc, lineno) from None
    if ref is not None and ref.core >= num_cores:
        raise TraceFormatError(f"core {ref.core} >= configured core count {num_cores}", 3, lineno, line)
    return ref


def read_chunks(source: Source, chunk_size: int = 1 << 16, num_cores: int = MAX_CORES,
                backend: Optional[str] = None) -> Iterator[tuple[array, array, array]]:
    """Stream the trace as ``(ops, cores, addrs)`` typed arrays for the kernel.

    Records whose core is ``>= num_cores`` are rejected with their line number.
    Paths go through the compiled scanner when that backend is active.
    """
    scan = scanner(backend)
    if scan is not None and isinstance(source, (str, os.PathLike)):
        yield from _scan_file(scan, source, chunk_size, num_cores)
        return
    match = _RECORD.fullmatch
    f = _open_lines(source)
    ops, cores, addrs = array("B"), array("H"), array("Q")
    try:
        for lineno, line in enumerate(f, 1):
            m = match(line, 0, len(line) - 1 if line.endswith("\n") else len(line))
            ref = None
            if m is not None and int(m.group(2)) < num_cores and len(m.group(3)) <= 16:
                op, core, hexaddr = m.groups()
                ops.append(op == "S")
                cores.append(int(core))
                addrs.append(int(hexaddr, 16))
            else:
                ref = _checked(line, lineno, num_cores)
                if ref is not None:
                    ops.append(ref.op)
                    cores.append(ref.core)
                    addrs.append(ref.addr)
            if len(ops) >= chunk_size:
                yield ops, cores, addrs
                ops, cores, addrs = array("B"), array("H"), array("Q")
        if ops:
            yield ops, cores, addrs
    finally:
        if f is not source:
            f.close()


def _scan_file(scan, path, chunk_size: int, num_cores: int):
    lineno = 1
    carry = b""
    with open(path, "rb") as f:
        while True:
            data = f.read(max(chunk_size, 1) * 16)
            if data:
                buf = carry + data
                cut = buf.rfind(b"\n") + 1
                if cut == 0:
                    carry = buf
                    continue
                buf, carry = buf[:cut], buf[cut:]
            else:
                buf, carry = carry, b""
            pos = 0
            while pos < len(buf):
                ops, cores, addrs, pos, nlines, stopped = scan(buf, pos, num_cores)
                lineno += nlines
                if stopped:
                    end = buf.find(b"\n", pos)
                    end = len(buf) if end < 0 else end + 1
                    try:
                        line = buf[pos:end].decode("utf-8")
                    except UnicodeDecodeError:
                        raise TraceFormatError("line is not valid UTF-8", 1, lineno) from None
                    ref = _checked(line, lineno, num_cores)
                    if ref is not None:
                        ops.append(ref.op)
                        cores.append(ref.core)
                        addrs.append(ref.addr)
                    lineno += 1
                    pos = end
                if ops:
                    yield ops, cores, addrs
            if not data:
                return


def max_core(source: Source) -> int:
    """Highest core id in the trace, or -1 if it holds no records."""
    hi = -1
    for _, cores, _ in read_chunks(source):
        hi = max(hi, max(cores))
    return hi


def write_trace(dest: Union[str, os.PathLike, IO[str]], refs: Iterable[MemoryRef],
                header: Iterable[str] = ()) -> int:
    """Write ``header`` as ``#`` comments then the records; returns the record count."""
    own = isinstance(dest, (str, os.PathLike))
    f = open(dest, "w", encoding="utf-8", newline="\n") if own else dest
    n = 0
    try:
        for h in header:
            f.write(f"# {h}\n")
        buf = []
        for ref in refs:
            buf.append(f"{'S' if ref.op else 'L'} {ref.core} {ref.addr:#x}\n")
            if len(buf) >= 8192:
                f.write("".join(buf))
                n += len(buf)
                buf.clear()
        f.write("".join(buf))
        n += len(buf)
    finally:
        if own:
            f.close()
    return n


def dumps(refs: Iterable[MemoryRef]) -> str:
    buf = io.StringIO()
    write_trace(buf, refs)
    return buf.getvalue()
