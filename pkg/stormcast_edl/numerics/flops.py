"""Exact floating-point operation counting for forward passes.

Counting convention: a multiply-add counts as two operations, so a matrix
product of ``m×k`` by ``k×n`` costs ``2·m·k·n``; elementwise operations and
special functions cost one per output element; reductions cost one per input
element; softmax costs three per element (exp, sum, divide). Reshapes,
transposes and indexing are free.
"""

import logging
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, Optional

logger = logging.getLogger(__name__)


class FlopCounter:
    """Accumulates floating-point operation counts with a per-operation breakdown."""

    def __init__(self):
        self.total: int = 0
        self.breakdown: dict[str, int] = {}

    def add(self, op: str, count: int) -> None:
        count = int(count)
        if count < 0:
            raise ValueError(f"FLOP count for {op} must be non-negative, got {count}")
        self.total += count
        self.breakdown[op] = self.breakdown.get(op, 0) + count

    def reset(self) -> None:
        self.total = 0
        self.breakdown = {}

    def snapshot(self) -> dict[str, int]:
        """Return a copy of the breakdown plus the running total under ``"total"``."""
        result = dict(sorted(self.breakdown.items()))
        result["total"] = self.total
        return result

    def __repr__(self) -> str:
        return f"FlopCounter(total={self.total})"


_active_counter: ContextVar[Optional[FlopCounter]] = ContextVar(
    "stormcast_flop_counter", default=None
)


def record_flops(op: str, count: int) -> None:
    """Charge ``count`` operations to the active counter, if any."""
    counter = _active_counter.get()
    if counter is not None:
        counter.add(op, count)


def active_counter() -> Optional[FlopCounter]:
    return _active_counter.get()


@contextmanager
def count_flops(counter: Optional[FlopCounter] = None) -> Iterator[FlopCounter]:
    """
    Activate a counter for the operations executed inside the block.

    Args:
        counter: Counter to charge; a fresh one is created when omitted

    Returns:
        Context manager yielding the active counter
    """
    counter = counter if counter is not None else FlopCounter()
    token = _active_counter.set(counter)
    try:
        yield counter
    finally:
        _active_counter.reset(token)
