"""MOESI snoopy-bus coherence simulator with invalidate/update hybrid write policies."""

from .core import (
    BusTransaction,
    CacheGeometry,
    CacheLine,
    CoherenceState,
    MemoryRef,
    Op,
    SchemeConfig,
    SchemeVariant,
    TxnKind,
    Writeback,
    block_of,
)
from .engine import BACKEND, Engine, run
from .errors import CoherenceViolation, TraceFormatError, Violation
from .metrics import MetricsTable
from .schemes import PolicyDecision, WriteContext, decide, parse_scheme

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BusTransaction", "CacheGeometry", "CacheLine", "CoherenceState", "CoherenceViolation",
    "Engine", "MemoryRef", "MetricsTable", "Op", "PolicyDecision", "SchemeConfig", "SchemeVariant",
    "TraceFormatError", "TxnKind", "Violation", "WriteContext", "Writeback", "block_of", "decide",
    "parse_scheme", "run",
]
