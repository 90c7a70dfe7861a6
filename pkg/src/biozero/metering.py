"""Operation counting used as a gas proxy.

Group operations call :func:`count`; nothing is recorded unless a
:class:`Meter` is active in the current context.
"""

from __future__ import annotations

import contextvars
from contextlib import contextmanager
from dataclasses import dataclass, field

KINDS = ("exp", "mul", "hash")

_active: contextvars.ContextVar["Meter | None"] = contextvars.ContextVar(
    "biozero_meter", default=None
)


@dataclass
class OpCounts:
    exp: int = 0
    mul: int = 0
    hash: int = 0

    @property
    def total(self) -> int:
        return self.exp + self.mul + self.hash

    def __add__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(self.exp + other.exp, self.mul + other.mul, self.hash + other.hash)


@dataclass
class Meter:
    stage: int = 0
    stages: dict[int, OpCounts] = field(default_factory=dict)

    def tick(self, kind: str, n: int = 1) -> None:
        counts = self.stages.setdefault(self.stage, OpCounts())
        setattr(counts, kind, getattr(counts, kind) + n)

    def enter(self, stage: int) -> None:
        self.stage = stage
        self.stages.setdefault(stage, OpCounts())


def count(kind: str, n: int = 1) -> None:
    meter = _active.get()
    if meter is not None:
        meter.tick(kind, n)


@contextmanager
def metered():
    meter = Meter()
    token = _active.set(meter)
    try:
        yield meter
    finally:
        _active.reset(token)


@contextmanager
def suspended():
    """Stop counting inside the block (bookkeeping that is not verification work)."""
    token = _active.set(None)
    try:
        yield
    finally:
        _active.reset(token)
