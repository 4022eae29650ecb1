"""Deterministic pseudo-random generator for reproducible experiments.

SplitMix64 with the standard published constants.  The step function is
bit-exact and platform-independent (see README, "Deterministic RNG"):

    state = (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state
    z = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z XOR (z >> 31)

Bounded integers use rejection sampling (no modulo bias), uniforms map the
top 53 bits into [0, 1), and normals use the Box-Muller transform.  All
dataset permutations, subsampling, synthetic streams, and the random-removal
baseline draw from this generator only.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Constant mixed into a seed to derive an independent stream (label flips in
# synth_noisy must not perturb the instance stream).
STREAM_SPLIT = 0x3C79AC492BA7B653


class SplitMix64:
    """SplitMix64 generator over a 64-bit state."""

    __slots__ = ("_state", "_spare_normal")

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        """Return the next 64-bit output."""
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = ((1 << 64) // bound) * bound
        while True:
            u = self.next_u64()
            if u < limit:
                return u % bound

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes two uniforms per pair."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        # u1 in (0, 1] so log(u1) is finite.
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
        u2 = (self.next_u64() >> 11) * 2.0**-53
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_normal = r * math.sin(theta)
        return r * math.cos(theta)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates: for i = n-1..1, swap items[i], items[below(i+1)]."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_stream_seed(seed: int) -> int:
    """Seed for an auxiliary stream decoupled from the main one."""
    return (seed ^ STREAM_SPLIT) & _MASK64
