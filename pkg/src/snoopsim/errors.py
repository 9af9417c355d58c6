"""Exception types shared by the trace reader, kernels and CLI."""

from __future__ import annotations

from dataclasses import dataclass, field


class TraceFormatError(ValueError):
    """A trace line that does not follow the ``<op> <core> <addr>`` grammar."""

    def __init__(self, reason: str, column: int = 0, lineno: int | None = None, line: str = ""):
        self.reason = reason
        self.column = column
        self.lineno = lineno
        self.line = line
        where = f"line {lineno}, " if lineno is not None else ""
        super().__init__(f"{where}column {column}: {reason}")


@dataclass(frozen=True)
class Violation:
    check: str
    block: int
    holders: tuple = field(default=())  # ((core, state name, version), ...)
    detail: str = ""

    def __str__(self) -> str:
        who = ", ".join(f"core {c}={s}" for c, s, *_ in self.holders) or "no holders"
        msg = f"{self.check} violated on block {self.block:#x} ({who})"
        return f"{msg}: {self.detail}" if self.detail else msg


class CoherenceViolation(RuntimeError):
    def __init__(self, violation: Violation, step: int | None = None):
        self.violation = violation
        self.step = step
        prefix = f"step {step}: " if step is not None else ""
        super().__init__(prefix + str(violation))
