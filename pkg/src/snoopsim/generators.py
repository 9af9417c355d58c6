"""Seeded synthetic workloads: shared locks, neighbour-reading arrays, pseudo-server.

All generators draw from :class:`random.Random` (Mersenne Twister, MT19937)
seeded with ``WorkloadSpec.seed``; the algorithm id is written into the
trace header so a trace can be regenerated exactly.
"""

from __future__ import annotations

import enum
import random
from dataclasses import asdict, dataclass
from typing import Iterator

from .core import MAX_CORES, MemoryRef, Op
from .trace_io import write_trace

PRNG_ID = "python-random-mt19937"
KIB = 1024
BLOCK = 64
WORD = 4

LOAD, STORE = Op.LOAD, Op.STORE


class WorkloadKind(str, enum.Enum):
    LOCKS = "locks"
    ARRAYS = "arrays"
    SERVER = "server"


@dataclass(frozen=True)
class WorkloadSpec:
    kind: WorkloadKind
    num_cores: int
    num_refs: int = 5_000_000
    seed: int = 0
    # locks
    num_locks: int = 3
    lock_prob: float = 0.10
    private_kib: int = 64
    # arrays
    row_length: int = 1024
    # server
    public_kib: int = 256

    def __post_init__(self):
        object.__setattr__(self, "kind", WorkloadKind(self.kind))
        lo = 2 if self.kind is WorkloadKind.SERVER else 1
        if not lo <= self.num_cores <= MAX_CORES:
            raise ValueError(f"{self.kind.value} needs {lo}-{MAX_CORES} cores, got {self.num_cores}")
        if self.num_refs <= 0:
            raise ValueError("num_refs must be positive")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.num_locks < 1:
            raise ValueError("num_locks must be positive")
        if not 0.0 <= self.lock_prob <= 1.0:
            raise ValueError("lock_prob must lie in [0, 1]")
        if self.private_kib < 1 or self.public_kib < 1:
            raise ValueError("region sizes must be at least 1 KiB")
        if self.row_length < 1:
            raise ValueError("row_length must be positive")

    def header(self) -> list[str]:
        params = {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in asdict(self).items()}
        lines = [f"snoopsim workload {self.kind.value}", f"prng: {PRNG_ID}"]
        lines += [f"{k}: {v}" for k, v in params.items() if k in _RELEVANT[self.kind]]
        return lines

    # -- address layout ------------------------------------------------

    @property
    def lock_addrs(self) -> list[int]:
        return [i * BLOCK for i in range(self.num_locks)]

    @property
    def shared_bytes(self) -> int:
        """Locks live below this bound; private ranges start at it (4 KiB aligned)."""
        return -(-self.num_locks * BLOCK // (4 * KIB)) * 4 * KIB

    def private_range(self, core: int) -> tuple[int, int]:
        size = self.private_kib * KIB
        if self.kind is WorkloadKind.LOCKS:
            base = self.shared_bytes + core * size
        elif self.kind is WorkloadKind.SERVER:
            if core == 0:
                raise ValueError("the server core has no private slice")
            base = self.public_kib * KIB + (core - 1) * size
        else:
            raise ValueError("arrays workload has no private ranges")
        return base, base + size

    @property
    def public_range(self) -> tuple[int, int]:
        return 0, self.public_kib * KIB

    def element_addr(self, row: int, col: int) -> int:
        return (row * self.row_length + col) * WORD

    @property
    def address_bound(self) -> int:
        if self.kind is WorkloadKind.LOCKS:
            return self.shared_bytes + self.num_cores * self.private_kib * KIB
        if self.kind is WorkloadKind.ARRAYS:
            return self.num_cores * self.row_length * WORD
        return self.public_kib * KIB + (self.num_cores - 1) * self.private_kib * KIB


_RELEVANT = {
    WorkloadKind.LOCKS: ("num_cores", "num_refs", "seed", "num_locks", "lock_prob", "private_kib"),
    WorkloadKind.ARRAYS: ("num_cores", "num_refs", "seed", "row_length"),
    WorkloadKind.SERVER: ("num_cores", "num_refs", "seed", "public_kib", "private_kib"),
}


def _word(rng: random.Random, lo: int, hi: int) -> int:
    return lo + rng.randrange((hi - lo) // WORD) * WORD


def _locks(spec: WorkloadSpec) -> Iterator[MemoryRef]:
    rng = random.Random(spec.seed)
    n = spec.num_cores
    locks = spec.lock_addrs
    holder = [-1] * len(locks)
    ranges = [spec.private_range(c) for c in range(n)]
    while True:
        core = rng.randrange(n)
        if rng.random() < spec.lock_prob:
            k = rng.randrange(len(locks))
            addr = locks[k]
            if holder[k] == core:
                holder[k] = -1
                yield MemoryRef(STORE, core, addr)
            else:
                yield MemoryRef(LOAD, core, addr)
                if holder[k] < 0:
                    holder[k] = core
                    yield MemoryRef(STORE, core, addr)
        else:
            lo, hi = ranges[core]
            op = STORE if rng.randrange(3) == 0 else LOAD
            yield MemoryRef(op, core, _word(rng, lo, hi))


def _arrays(spec: WorkloadSpec) -> Iterator[MemoryRef]:
    rng = random.Random(spec.seed)
    n = spec.num_cores
    width = spec.row_length
    col = [0] * n
    at = spec.element_addr
    while True:
        i = rng.randrange(n)
        j = col[i]
        yield MemoryRef(LOAD, i, at(i, j))
        if i > 0:
            yield MemoryRef(LOAD, i, at(i - 1, j))
        if i + 1 < n:
            yield MemoryRef(LOAD, i, at(i + 1, j))
        if j > 0:
            yield MemoryRef(LOAD, i, at(i, j - 1))
        if j + 1 < width:
            yield MemoryRef(LOAD, i, at(i, j + 1))
        yield MemoryRef(STORE, i, at(i, j))
        col[i] = j + 1 if j + 1 < width else 0


def _server(spec: WorkloadSpec) -> Iterator[MemoryRef]:
    rng = random.Random(spec.seed)
    n = spec.num_cores
    bound = spec.address_bound
    pub_lo, pub_hi = spec.public_range
    ranges = [None] + [spec.private_range(c) for c in range(1, n)]
    while True:
        core = rng.randrange(n)
        if core == 0:
            yield MemoryRef(STORE, 0, _word(rng, 0, bound))
        elif rng.random() < 0.5:
            yield MemoryRef(LOAD, core, _word(rng, pub_lo, pub_hi))
        else:
            lo, hi = ranges[core]
            yield MemoryRef(LOAD, core, _word(rng, lo, hi))


_GENERATORS = {
    WorkloadKind.LOCKS: _locks,
    WorkloadKind.ARRAYS: _arrays,
    WorkloadKind.SERVER: _server,
}


def generate(spec: WorkloadSpec) -> Iterator[MemoryRef]:
    """Exactly ``spec.num_refs`` references; multi-record steps are cut at the limit."""
    remaining = spec.num_refs
    for ref in _GENERATORS[spec.kind](spec):
        yield ref
        remaining -= 1
        if not remaining:
            return


def gen_locks(spec: WorkloadSpec) -> Iterator[MemoryRef]:
    return generate(_as_kind(spec, WorkloadKind.LOCKS))


def gen_arrays(spec: WorkloadSpec) -> Iterator[MemoryRef]:
    return generate(_as_kind(spec, WorkloadKind.ARRAYS))


def gen_server(spec: WorkloadSpec) -> Iterator[MemoryRef]:
    return generate(_as_kind(spec, WorkloadKind.SERVER))


def _as_kind(spec: WorkloadSpec, kind: WorkloadKind) -> WorkloadSpec:
    if spec.kind is not kind:
        raise ValueError(f"expected a {kind.value} spec, got {spec.kind.value}")
    return spec


def write_workload(spec: WorkloadSpec, path) -> int:
    return write_trace(path, generate(spec), spec.header())
