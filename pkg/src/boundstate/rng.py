"""Deterministic pseudo-random numbers for initial guesses and start vectors.

A single xorshift64* generator is used everywhere randomness is needed, so
that runs are reproducible from one integer seed and easy to re-create in
other languages.  The constants are the classic ones (shifts 12, 25, 27 and
multiplier 2685821657736338717); sub-streams are derived by offsetting the
seed with multiples of the 64-bit golden-ratio constant 0x9E3779B97F4A7C15.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_MULTIPLIER = 2685821657736338717
_GOLDEN = 0x9E3779B97F4A7C15


class XorShift64Star:
    """xorshift64* generator; ``stream`` selects an independent sub-stream."""

    def __init__(self, seed, stream=0):
        state = (int(seed) + int(stream) * _GOLDEN) & _MASK64
        if state == 0:
            state = _GOLDEN
        self._state = state

    def next_u64(self):
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULTIPLIER) & _MASK64

    def uniform(self, low=0.0, high=1.0):
        """Uniform double in [low, high) with 53 random bits."""
        u = self.next_u64() >> 11
        return low + (high - low) * (u * 2.0**-53)

    def uniform_vector(self, n, low=0.0, high=1.0):
        return np.array([self.uniform(low, high) for _ in range(n)])
