"""Trace-driven MOESI engine over per-core set-associative caches.

The per-reference work happens in a kernel: the compiled ``_ckernel``
extension when it is importable, else the pure-Python ``_pykernel``.  Set
``SNOOPSIM_BACKEND=python`` (or ``cython``) to force one.
"""

from __future__ import annotations

import logging
import os
from typing import Iterable, Optional

from ._backend import BACKEND, KERNELS, resolve
from .core import (
    BusTransaction,
    CacheGeometry,
    CacheLine,
    CoherenceState,
    MemoryRef,
    SchemeConfig,
    TxnKind,
    Writeback,
    block_of,
)
from .errors import CoherenceViolation, TraceFormatError, Violation
from .metrics import MetricsTable

log = logging.getLogger(__name__)

# Full rescans in verify mode happen this often; every step gets a local check.
FULL_CHECK_INTERVAL = 1 << 17


class Engine:
    def __init__(self, geometry: CacheGeometry = CacheGeometry(),
                 scheme: SchemeConfig = SchemeConfig.invalidate_only(),
                 verify: bool = False, count_local_reads: bool = False,
                 backend: Optional[str] = None):
        self.geometry = geometry
        self.scheme = scheme
        self.verify = verify
        self.backend = resolve(backend)
        self._k = KERNELS[self.backend](
            geometry.num_cores, geometry.num_sets, geometry.ways, geometry.block_shift,
            int(scheme.variant), scheme.param or 0, scheme.counter_ceiling,
            verify, count_local_reads,
        )

    # -- stepping ------------------------------------------------------

    def _check_core(self, core: int) -> None:
        if not 0 <= core < self.geometry.num_cores:
            raise TraceFormatError(f"core {core} out of range for {self.geometry.num_cores} cores")

    def step(self, ref: MemoryRef) -> list[BusTransaction]:
        self._check_core(ref.core)
        code = self._k.access(int(ref.op), ref.core, ref.addr)
        if code < 0:
            return []
        return [BusTransaction(TxnKind(code), ref.core, ref.addr >> self.geometry.block_shift)]

    def _txn(self, code: int, core: int, addr: int) -> Optional[BusTransaction]:
        if code < 0:
            return None
        return BusTransaction(TxnKind(code), core, addr >> self.geometry.block_shift)

    def local_read(self, core: int, addr: int) -> Optional[BusTransaction]:
        """Processor load without metric accounting."""
        self._check_core(core)
        return self._txn(self._k.read(core, addr), core, addr)

    def local_write(self, core: int, addr: int) -> Optional[BusTransaction]:
        """Processor store without metric accounting."""
        self._check_core(core)
        return self._txn(self._k.write(core, addr), core, addr)

    def snoop(self, txn: BusTransaction) -> None:
        """Apply ``txn``'s effect to every cache except the issuer's."""
        self._k.snoop(int(txn.kind), txn.issuer, txn.block)

    def evict_victim(self, core: int, set_index: int) -> Optional[Writeback]:
        block, wrote_back = self._k.evict(core, set_index)
        return Writeback(core, block) if wrote_back else None

    def run_arrays(self, ops, cores, addrs) -> None:
        """Feed parallel typed arrays (uint8 ops, uint16 cores, uint64 addrs)."""
        self._k.run_batch(ops, cores, addrs)

    def feed(self, refs: Iterable[MemoryRef]) -> None:
        access = self._k.access
        n = self.geometry.num_cores
        for ref in refs:
            if not 0 <= ref.core < n:
                raise TraceFormatError(f"core {ref.core} out of range for {n} cores")
            access(int(ref.op), ref.core, ref.addr)

    @property
    def steps(self) -> int:
        return self._k.steps

    # -- inspection ----------------------------------------------------

    @property
    def metrics(self) -> MetricsTable:
        config = {
            "scheme": str(self.scheme),
            "cores": self.geometry.num_cores,
            "sets": self.geometry.num_sets,
            "ways": self.geometry.ways,
            "block_size": self.geometry.block_size_bytes,
        }
        return MetricsTable.from_rows(self._k.get_counts(), config)

    def line(self, core: int, addr: int) -> Optional[CacheLine]:
        """The resident line for ``addr`` in ``core``'s cache, including I lines still holding the tag."""
        set_index, tag, _ = block_of(addr, self.geometry)
        for c, s, _, t, st, counter, rec, ver in self._k.lines():
            if c == core and s == set_index and t == tag:
                return CacheLine(t, CoherenceState(st), counter, rec, ver)
        return None

    def state_of(self, core: int, addr: int) -> CoherenceState:
        ln = self.line(core, addr)
        return CoherenceState.I if ln is None else ln.state

    def states(self, addr: int) -> list[CoherenceState]:
        return [self.state_of(c, addr) for c in range(self.geometry.num_cores)]

    def sharers(self, block: int) -> frozenset[int]:
        mask = self._k.directory().get(block, 0)
        return frozenset(c for c in range(self.geometry.num_cores) if mask >> c & 1)

    def directory(self) -> dict[int, frozenset[int]]:
        n = self.geometry.num_cores
        return {b: frozenset(c for c in range(n) if m >> c & 1) for b, m in self._k.directory().items()}

    def latest_version(self, block: int) -> int:
        return self._k.latest_version(block)

    def install_line(self, core: int, addr: int, state: CoherenceState,
                     counter: int = 0, version: int = 0) -> None:
        """Test hook: force a line into ``state`` and keep the directory in sync."""
        self._k.install(core, addr, int(state), counter, version)

    def verify_invariants(self) -> list[Violation]:
        """Rescan every cache and report all coherence violations (empty list if none)."""
        geom = self.geometry
        holders: dict[int, list[tuple[int, str, int]]] = {}
        set_shift = geom.set_shift
        for core, s, _, tag, st, _, _, ver in self._k.lines():
            if st:
                block = (tag << set_shift) | s
                holders.setdefault(block, []).append((core, CoherenceState(st).name, ver))
        out = []
        directory = self._k.directory()
        for block in sorted(set(holders) | set(directory)):
            hs = holders.get(block, [])
            held = tuple(hs)
            names = [h[1] for h in hs]
            owners = sum(n in ("M", "O") for n in names)
            if owners > 1:
                out.append(Violation("single-owner", block, held, "more than one M/O holder"))
            if any(n in ("M", "E") for n in names) and len(hs) > 1:
                out.append(Violation("exclusivity", block, held, "M/E copy coexists with another valid copy"))
            mask = 0
            for h in hs:
                mask |= 1 << h[0]
            if directory.get(block, 0) != mask:
                out.append(Violation("directory", block, held,
                                     f"directory mask {directory.get(block, 0):#x} != caches {mask:#x}"))
            if self.verify:
                latest = self._k.latest_version(block)
                if any(h[2] != latest for h in hs):
                    out.append(Violation("stale-copy", block, held, f"valid copy behind latest version {latest}"))
                if not owners and self._k.memory_version(block) != latest:
                    out.append(Violation("stale-memory", block, held, "no dirty owner but memory is stale"))
        return out

    def assert_coherent(self) -> None:
        bad = self.verify_invariants()
        if bad:
            raise CoherenceViolation(bad[0], self.steps)


def run(trace, geometry: CacheGeometry, scheme: SchemeConfig, verify: bool = False,
        backend: Optional[str] = None, count_local_reads: bool = False) -> MetricsTable:
    """Simulate ``trace`` (a path, open file, or iterable of MemoryRef) and return its metrics."""
    from .trace_io import read_chunks

    eng = Engine(geometry, scheme, verify=verify, backend=backend, count_local_reads=count_local_reads)
    if isinstance(trace, (str, os.PathLike)) or hasattr(trace, "read"):
        next_check = FULL_CHECK_INTERVAL
        for ops, cores, addrs in read_chunks(trace, num_cores=geometry.num_cores, backend=eng.backend):
            eng.run_arrays(ops, cores, addrs)
            if verify and eng.steps >= next_check:
                eng.assert_coherent()
                next_check = eng.steps + FULL_CHECK_INTERVAL
    else:
        eng.feed(trace)
    if verify:
        eng.assert_coherent()
    log.debug("ran %d refs with %s on %s backend", eng.steps, scheme, eng.backend)
    return eng.metrics


__all__ = ["Engine", "run", "BACKEND", "KERNELS"]
