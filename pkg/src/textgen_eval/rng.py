"""Deterministic randomness shared by every seeded stage.

The reproducibility contract is bit-exact across platforms and runs:

* ``derive_seed(master, stage)`` is the first 8 bytes (big-endian) of
  SHA-256 over the UTF-8 string ``"{master}/{stage}"``.  All pipeline stages
  obtain their seed this way from one top-level seed, so any stage can be
  re-run in isolation.
* ``Xorshift64Star`` is the xorshift64* generator: the state is first mixed
  once with SplitMix64, then each step applies ``x ^= x >> 12``,
  ``x ^= x << 25``, ``x ^= x >> 27`` (all modulo 2**64) and returns
  ``x * 0x2545F4914F6CDD1D mod 2**64``.
* Bounded draws are ``next_u64() % n``; shuffles are Fisher-Yates from the
  top index down.  Both are part of the contract: any reimplementation that
  follows them reproduces every sample, permutation and generation byte for
  byte.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 step; used to whiten raw seeds."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, stage: str) -> int:
    """Derive a 64-bit stage seed from the top-level seed and a stage name."""
    digest = hashlib.sha256(f"{master}/{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class Xorshift64Star:
    """xorshift64* with SplitMix64 seeding; nonzero state guaranteed."""

    __slots__ = ("_state",)

    _MULT = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        # xorshift state must never be zero
        self._state = state if state else 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * self._MULT) & MASK64

    def below(self, n: int) -> int:
        """Uniform draw in [0, n)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, top index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        """A uniform permutation of range(n)."""
        out = list(range(n))
        self.shuffle(out)
        return out
