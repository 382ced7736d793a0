"""Operation counters.

Primitives call :func:`tally` unconditionally; the call is a no-op unless a
:class:`OpCounters` has been activated with :func:`counting`.  This keeps the
arithmetic free of bookkeeping arguments while still letting the protocol
simulator attribute every exponentiation to the role that performed it.
"""
from __future__ import annotations

import dataclasses
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, Optional


@dataclasses.dataclass
class OpCounters:
    encryptions: int = 0
    decryptions: int = 0
    modexps: int = 0
    hom_mults: int = 0
    inversions: int = 0
    secure_steps: int = 0
    differences: int = 0
    clear_additions: int = 0

    def as_dict(self) -> dict[str, int]:
        return dataclasses.asdict(self)

    def __iadd__(self, other: "OpCounters") -> "OpCounters":
        for f in dataclasses.fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self


_active: ContextVar[Optional[OpCounters]] = ContextVar("hpre_counters", default=None)


def tally(name: str, k: int = 1) -> None:
    counters = _active.get()
    if counters is not None:
        setattr(counters, name, getattr(counters, name) + k)


@contextmanager
def counting(counters: Optional[OpCounters] = None) -> Iterator[OpCounters]:
    """Route every :func:`tally` in the block to ``counters`` (a fresh one if omitted)."""
    if counters is None:
        counters = OpCounters()
    token = _active.set(counters)
    try:
        yield counters
    finally:
        _active.reset(token)
