"""SplitMix64: a small, portable 64-bit generator.

Algorithm (Steele, Lea, Flood 2014), all arithmetic modulo 2**64::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

Derived draws:

* ``uniform()`` = ``(next_u64() >> 11) * 2**-53``
* ``below(n)`` = ``floor(uniform() * n)``
* ``weighted(ws)`` = first index whose cumulative weight exceeds
  ``uniform() * sum(ws)``
"""

from __future__ import annotations

from typing import Sequence

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK
        self.draws = 0

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        self.draws += 1
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        return min(int(self.uniform() * n), n - 1)

    def weighted(self, weights: Sequence[float]) -> int:
        total = sum(weights)
        if total <= 0:
            raise ValueError("weights must have a positive sum")
        r = self.uniform() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                return i
        return len(weights) - 1
