"""xorshift64* generator.

Algorithm (Vigna 2014), all arithmetic mod 2^64::

    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    return x * 0x2545F4914F6CDD1D

The state is seeded with splitmix64(seed) so that small seeds (0, 1, 7)
give well-mixed streams; a zero state is replaced by a fixed constant.
Uniform doubles take the top 53 bits of each output.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int = 0):
        s = splitmix64(int(seed) & _MASK)
        self.state = s or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & _MASK

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, lo=0.0, hi=1.0, size=None):
        if size is None:
            return lo + (hi - lo) * self.random()
        k = int(np.prod(size))
        vals = np.array([self.random() for _ in range(k)]).reshape(size)
        return lo + (hi - lo) * vals

    def normal(self, size=None):
        """Standard normals by Box-Muller (one pair per two uniforms)."""
        k = 1 if size is None else int(np.prod(size))
        out = []
        while len(out) < k:
            u1 = 1.0 - self.random()
            u2 = self.random()
            r = math.sqrt(-2.0 * math.log(u1))
            out.append(r * math.cos(2.0 * math.pi * u2))
            out.append(r * math.sin(2.0 * math.pi * u2))
        if size is None:
            return out[0]
        return np.array(out[:k]).reshape(size)

    def integers(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi)."""
        return lo + int(self.random() * (hi - lo))

    def choice_sign(self) -> float:
        return 1.0 if self.next_u64() >> 63 else -1.0

    def spawn(self, k: int) -> "XorShift64Star":
        """Independent child stream keyed by k."""
        return XorShift64Star(splitmix64(self.state ^ splitmix64(k)))
