"""Shared vocabulary: references, geometry, MOESI states, lines, bus events, schemes."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

MAX_CORES = 16
ADDR_LIMIT = 1 << 64


class Op(enum.IntEnum):
    LOAD = 0
    STORE = 1


class MemoryRef(NamedTuple):
    op: Op
    core: int
    addr: int


class CoherenceState(enum.IntEnum):
    # Integer codes are shared with the simulation kernels.
    I = 0
    S = 1
    E = 2
    O = 3
    M = 4

    @property
    def is_valid(self) -> bool:
        return self is not CoherenceState.I

    @property
    def is_owner(self) -> bool:
        return self in (CoherenceState.M, CoherenceState.O)

    @property
    def is_dirty(self) -> bool:
        return self in (CoherenceState.M, CoherenceState.O)

    @property
    def is_exclusive(self) -> bool:
        return self in (CoherenceState.M, CoherenceState.E)


class TxnKind(enum.IntEnum):
    READ_REQ = 0
    INVALIDATE_REQ = 1
    UPDATE_REQ = 2


class BusTransaction(NamedTuple):
    kind: TxnKind
    issuer: int
    block: int


class Writeback(NamedTuple):
    core: int
    block: int


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class CacheGeometry:
    num_sets: int = 64
    ways: int = 4
    block_size_bytes: int = 64
    num_cores: int = 2

    def __post_init__(self):
        if not _is_pow2(self.num_sets):
            raise ValueError(f"num_sets must be a positive power of two, got {self.num_sets}")
        if not _is_pow2(self.block_size_bytes):
            raise ValueError(
                f"block_size_bytes must be a positive power of two, got {self.block_size_bytes}"
            )
        if self.ways < 1:
            raise ValueError(f"ways must be positive, got {self.ways}")
        if not 1 <= self.num_cores <= MAX_CORES:
            raise ValueError(f"num_cores must be in [1, {MAX_CORES}], got {self.num_cores}")

    @property
    def block_shift(self) -> int:
        return self.block_size_bytes.bit_length() - 1

    @property
    def set_shift(self) -> int:
        return self.num_sets.bit_length() - 1

    def with_cores(self, num_cores: int) -> "CacheGeometry":
        return CacheGeometry(self.num_sets, self.ways, self.block_size_bytes, num_cores)


class BlockAddress(NamedTuple):
    set_index: int
    tag: int
    block_number: int


def block_of(addr: int, geom: CacheGeometry) -> BlockAddress:
    """Split a byte address into (set_index, tag, block_number) for ``geom``."""
    block = addr // geom.block_size_bytes
    return BlockAddress(block % geom.num_sets, block // geom.num_sets, block)


@dataclass
class CacheLine:
    tag: int
    state: CoherenceState
    counter: int = 0
    recency: int = 0
    version: int = 0


class SchemeVariant(enum.IntEnum):
    INVALIDATE_ONLY = 0
    UPDATE_ONLY = 1
    THRESHOLD = 2
    ADAPTED_MOESI = 3
    NUM_SHARERS = 4


_SCHEME_NAMES = {
    SchemeVariant.INVALIDATE_ONLY: "inv",
    SchemeVariant.UPDATE_ONLY: "upd",
    SchemeVariant.THRESHOLD: "threshold",
    SchemeVariant.ADAPTED_MOESI: "adapted",
    SchemeVariant.NUM_SHARERS: "sharers",
}


@dataclass(frozen=True)
class SchemeConfig:
    variant: SchemeVariant
    threshold_T: Optional[int] = None
    min_sharers_K: Optional[int] = None
    counter_ceiling: int = 15

    def __post_init__(self):
        needs_t = self.variant is SchemeVariant.THRESHOLD
        needs_k = self.variant is SchemeVariant.NUM_SHARERS
        if needs_t != (self.threshold_T is not None):
            raise ValueError("threshold_T is required by, and only by, the threshold scheme")
        if needs_k != (self.min_sharers_K is not None):
            raise ValueError("min_sharers_K is required by, and only by, the sharers scheme")
        if self.threshold_T is not None and self.threshold_T < 0:
            raise ValueError("threshold_T must be non-negative")
        if self.min_sharers_K is not None and self.min_sharers_K < 0:
            raise ValueError("min_sharers_K must be non-negative")
        if self.counter_ceiling < 1:
            raise ValueError("counter_ceiling must be positive")

    @property
    def param(self) -> Optional[int]:
        if self.threshold_T is not None:
            return self.threshold_T
        return self.min_sharers_K

    @property
    def name(self) -> str:
        return _SCHEME_NAMES[self.variant]

    def __str__(self) -> str:
        p = self.param
        return self.name if p is None else f"{self.name}:{p}"

    @classmethod
    def invalidate_only(cls) -> "SchemeConfig":
        return cls(SchemeVariant.INVALIDATE_ONLY)

    @classmethod
    def update_only(cls) -> "SchemeConfig":
        return cls(SchemeVariant.UPDATE_ONLY)

    @classmethod
    def threshold(cls, t: int, counter_ceiling: int = 15) -> "SchemeConfig":
        return cls(SchemeVariant.THRESHOLD, threshold_T=t, counter_ceiling=counter_ceiling)

    @classmethod
    def adapted_moesi(cls) -> "SchemeConfig":
        return cls(SchemeVariant.ADAPTED_MOESI)

    @classmethod
    def num_sharers(cls, k: int) -> "SchemeConfig":
        return cls(SchemeVariant.NUM_SHARERS, min_sharers_K=k)
