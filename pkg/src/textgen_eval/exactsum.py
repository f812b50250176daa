"""Exact float accumulation for order-insensitive reductions.

Maintains the running sum as a list of non-overlapping partials (Shewchuk's
algorithm, the same idea behind ``math.fsum``).  The rounded result is the
correctly rounded value of the exact real sum, so it does not depend on the
order in which terms arrive, and two accumulators can be merged without losing
exactness.  That is what makes sharded/parallel reductions bit-identical to
serial ones.
"""

from __future__ import annotations

import math
from typing import Iterable


class ExactSum:
    """Exact, mergeable float accumulator."""

    __slots__ = ("_partials",)

    def __init__(self, values: Iterable[float] = ()):  # noqa: B008 - tuple default
        self._partials: list[float] = []
        for v in values:
            self.add(v)

    def add(self, x: float) -> None:
        partials = self._partials
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]

    def merge(self, other: "ExactSum") -> None:
        """Fold another accumulator in; exactness is preserved."""
        for p in other._partials:
            self.add(p)

    @property
    def value(self) -> float:
        return math.fsum(self._partials)
