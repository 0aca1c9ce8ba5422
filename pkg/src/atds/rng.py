"""Seeded pseudo-random generator with fixed, documented constants.

All randomness in the toolkit (subset sampling, k-means++ initialization)
flows through :class:`SplitMix64` so that results are bit-identical across
platforms and Python versions. The generator is the SplitMix64 sequence:

    state_{n+1} = state_n + 0x9E3779B97F4A7C15   (mod 2^64)
    z = state_{n+1}
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9     (mod 2^64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB     (mod 2^64)
    output = z ^ (z >> 31)

Doubles are drawn as the top 53 bits scaled by 2^-53; bounded integers use
rejection sampling to avoid modulo bias; shuffles are Fisher-Yates from the
last index down.
"""

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit shift-multiply generator."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = _MASK64 - (_MASK64 + 1) % bound
        while True:
            u = self.next_u64()
            if u <= limit:
                return u % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, high index to low."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
