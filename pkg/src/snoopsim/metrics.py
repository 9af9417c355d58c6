"""Per-core event counts and their JSON/CSV reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Any

from .core import TxnKind

FIELDS = ("loads", "stores", "read_reqs", "invalidates", "updates", "writebacks")
CSV_HEADER = ("core",) + FIELDS


@dataclass
class CoreCounts:
    loads: int = 0
    stores: int = 0
    read_reqs: int = 0
    invalidates: int = 0
    updates: int = 0
    writebacks: int = 0

    @property
    def total(self) -> int:
        """Bus requests only; writebacks are reported but not part of the traffic total."""
        return self.read_reqs + self.invalidates + self.updates


_EVENT_FIELD = {
    "load": "loads",
    "store": "stores",
    TxnKind.READ_REQ: "read_reqs",
    TxnKind.INVALIDATE_REQ: "invalidates",
    TxnKind.UPDATE_REQ: "updates",
    "writeback": "writebacks",
}


@dataclass
class MetricsTable:
    per_core: list[CoreCounts]
    config: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def zeros(cls, num_cores: int, config: dict[str, Any] | None = None) -> "MetricsTable":
        return cls([CoreCounts() for _ in range(num_cores)], dict(config or {}))

    @classmethod
    def from_rows(cls, rows, config=None) -> "MetricsTable":
        return cls([CoreCounts(*r) for r in rows], dict(config or {}))

    @property
    def num_cores(self) -> int:
        return len(self.per_core)

    def record(self, core: int, event) -> None:
        """Increment one counter: ``event`` is a TxnKind, "load", "store" or "writeback"."""
        if not 0 <= core < len(self.per_core):
            raise IndexError(f"core {core} out of range")
        name = _EVENT_FIELD[event]
        c = self.per_core[core]
        setattr(c, name, getattr(c, name) + 1)

    def totals(self) -> CoreCounts:
        out = CoreCounts()
        for c in self.per_core:
            for f in FIELDS:
                setattr(out, f, getattr(out, f) + getattr(c, f))
        return out

    @property
    def total(self) -> int:
        return sum(c.total for c in self.per_core)

    def counts(self) -> list[tuple[int, ...]]:
        """Counts only, for comparing runs irrespective of config."""
        return [tuple(getattr(c, f) for f in FIELDS) for c in self.per_core]

    def merge(self, other: "MetricsTable") -> "MetricsTable":
        if other.num_cores != self.num_cores:
            raise ValueError("cannot merge tables with different core counts")
        rows = [tuple(a + b for a, b in zip(x, y)) for x, y in zip(self.counts(), other.counts())]
        return MetricsTable.from_rows(rows, self.config)

    # -- rendering -----------------------------------------------------

    def render(self, fmt: str = "json") -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown report format {fmt!r}")

    def to_json(self) -> str:
        tot = self.totals()
        doc = {
            "config": self.config,
            "per_core": [dict(core=i, **asdict(c), total=c.total) for i, c in enumerate(self.per_core)],
            "totals": dict(asdict(tot), total=tot.total),
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i, row in enumerate(self.counts()):
            w.writerow((i,) + row)
        tot = self.totals()
        w.writerow(("total",) + tuple(getattr(tot, f) for f in FIELDS))
        return buf.getvalue()

    @classmethod
    def from_json(cls, text: str) -> "MetricsTable":
        doc = json.loads(text)
        rows = [tuple(int(c[f]) for f in FIELDS) for c in doc["per_core"]]
        return cls.from_rows(rows, doc.get("config", {}))

    @classmethod
    def from_csv(cls, text: str) -> "MetricsTable":
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = [tuple(int(x) for x in r[1:]) for r in reader if r and r[0] != "total"]
        return cls.from_rows(rows)

