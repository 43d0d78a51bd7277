"""Deterministic counter-based random numbers shared by every sampler.

The generator is SplitMix64 used in counter mode: draw ``j`` of a stream with
key ``k`` is ``mix64(k + j*GOLDEN)``.  Because each draw is a pure function of
``(key, j)``, the sequential C loop in the compiled kernels and the vectorized
numpy fallback produce bit-identical streams, and every Monte Carlo task can
derive its own independent key from ``(seed, stream)`` so results never depend
on scheduling or worker count.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15  # SplitMix64 increment
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0xD1B54A32D192ED03

# exact in double precision: (u >> 11) has 53 bits, 2**-53 is a power of two
_U53_SCALE = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer (64-bit avalanche hash)."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _MIX1) & MASK64
    z ^= z >> 27
    z = (z * _MIX2) & MASK64
    z ^= z >> 31
    return z


def derive_key(seed: int, stream: int) -> int:
    """Hash (seed, stream) into the base counter of an independent draw window."""
    return mix64(mix64(seed + GOLDEN) ^ ((stream * _STREAM_SALT) & MASK64))


def draw(key: int, j: int) -> int:
    """The j-th uint64 of the stream with base counter ``key`` (j >= 1)."""
    return mix64(key + j * GOLDEN)


def uniform01(u: int) -> float:
    """Map a uint64 draw to [0, 1) keeping 53 bits; exact in both backends."""
    return (u >> 11) * _U53_SCALE


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64` on a uint64 array."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def draw_block(key: int, start: int, count: int) -> np.ndarray:
    """Draws ``start+1 .. start+count`` of the stream, as a uint64 array."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return mix64_array(np.uint64(key & MASK64) + idx * np.uint64(GOLDEN))


class Stream:
    """Sequential view of one counter stream (scalar Python, oracle-scale use)."""

    __slots__ = ("key", "pos")

    def __init__(self, seed: int, stream: int = 0):
        self.key = derive_key(seed, stream)
        self.pos = 0

    def next_u64(self) -> int:
        self.pos += 1
        return mix64(self.key + self.pos * GOLDEN)

    def uniform(self) -> float:
        return uniform01(self.next_u64())

    def below(self, n: int) -> int:
        """Uniform integer in [0, n); modulo bias < 2**-50 for n < 2**13."""
        return self.next_u64() % n
