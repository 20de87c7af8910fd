"""Seeded, portable random number generation.

Every random draw in this package flows through two small generators chosen
because they are trivial to reimplement bit for bit in any language:

* SplitMix64 derives independent per-item seeds from (master_seed, index).
* xoshiro256++ is the per-item stream behind all actual draws.

Uniform doubles use the 53-bit mantissa method, bounded integers the 64-bit
multiply-shift method, and Beta variates Johnk's rejection algorithm, so a
given seed always produces the same draw sequence.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 2.0**-53


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for item ``index``: the (index+1)-th output of a SplitMix64
    stream seeded with ``master_seed``, computed by random access."""
    if index < 0:
        raise ValueError("index must be >= 0")
    state = (master_seed + (index + 1) * _GOLDEN_GAMMA) & MASK64
    return _mix64(state)


class SplitMix64:
    """Reference SplitMix64 stream; also seeds xoshiro256++ state."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN_GAMMA) & MASK64
        return _mix64(self._state)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256pp:
    """xoshiro256++ plus the draw helpers the pipelines rely on.

    State is filled from SplitMix64, per the generator authors'
    recommendation, so a single 64-bit seed fully determines the stream.
    """

    def __init__(self, seed: int):
        sm = SplitMix64(seed)
        self._s0 = sm.next_u64()
        self._s1 = sm.next_u64()
        self._s2 = sm.next_u64()
        self._s3 = sm.next_u64()

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s0 + s3) & MASK64, 23) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniform01(self) -> float:
        """Uniform double in [0, 1): the top 53 bits over 2**53."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform(self, lo: float, hi: float) -> float:
        """Uniform double in [lo, hi)."""
        return lo + (hi - lo) * self.uniform01()

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via the 64-bit multiply-shift method."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def coin(self, p: float) -> bool:
        """True with probability p; always consumes exactly one draw."""
        return self.uniform01() < p

    def beta(self, alpha: float, beta: float) -> float:
        """Beta(alpha, beta) variate via Johnk's algorithm.

        Each rejection round consumes exactly two uniforms, u then v.
        """
        inv_a = 1.0 / alpha
        inv_b = 1.0 / beta
        while True:
            x = self.uniform01() ** inv_a
            y = self.uniform01() ** inv_b
            s = x + y
            if 0.0 < s <= 1.0:
                return x / s
