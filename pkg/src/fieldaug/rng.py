"""Deterministic random streams.

Everything stochastic in this package draws from :class:`RandomStream`, a
pure-integer xoshiro256** generator. Identical seeds give identical draw
sequences on every platform, which is what makes augmentation outputs
byte-reproducible across worker counts and machines.

Substreams are derived, not split: ``derive_seed(seed, index)`` is a pure
function, so any worker can reconstruct the stream for image ``index``
without coordination.
"""

from __future__ import annotations

__all__ = ["MASK64", "GOLDEN_GAMMA", "splitmix64", "derive_seed", "RandomStream"]

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

_TWO53_INV = 2.0 ** -53


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(x: int) -> int:
    """One full splitmix64 step from state ``x``: advance by the golden
    gamma, then mix. Convention fixed here; seeding and derivation below
    depend on it."""
    return _mix((x + GOLDEN_GAMMA) & MASK64)


def derive_seed(stream_seed: int, index: int) -> int:
    """Pure substream derivation: splitmix64(seed XOR index * golden gamma)."""
    x = (stream_seed ^ ((index * GOLDEN_GAMMA) & MASK64)) & MASK64
    return splitmix64(x)


class RandomStream:
    """xoshiro256** with 256-bit state, seeded by splitmix64 expansion of a
    64-bit seed (four successive outputs fill the state words)."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        state = seed & MASK64
        words = []
        for _ in range(4):
            state = (state + GOLDEN_GAMMA) & MASK64
            words.append(_mix(state))
        self._s0, self._s1, self._s2, self._s3 = words

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        x = (s1 * 5) & MASK64
        result = ((((x << 7) | (x >> 57)) & MASK64) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def next_float64(self) -> float:
        """Uniform in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _TWO53_INV

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float64()

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        k = int(self.next_float64() * n)
        return n - 1 if k >= n else k

    def next_byte(self) -> int:
        """Uniform byte; low 8 bits of one u64 draw."""
        return self.next_u64() & 0xFF

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, one draw per swap."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
