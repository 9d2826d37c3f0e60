"""Deterministic random numbers built on the SplitMix64 mixer.

The generator is counter-based: draw ``k`` is the SplitMix64 finalizer
applied to ``seed + (k+1) * GOLDEN`` (mod 2**64), which makes bulk draws a
single vectorized numpy expression and gives every (seed, counter) pair a
fixed value independent of how earlier draws were batched.  Identical seeds
therefore produce bitwise-identical streams on every platform.

``derive`` builds statistically independent child streams from integer or
string keys; training uses it to give each (purpose, epoch, image) its own
generator so the draw schedule does not depend on batching or threading.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Stream labels for Rng.derive, so independent consumers never collide.
STREAM_SHUFFLE = 1
STREAM_DROPOUT = 2
STREAM_AUGMENT = 3
STREAM_SYNTH = 4

_TWO53 = float(1 << 53)


def _mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (mod 2**64)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def _fold_key(key) -> int:
    """Map an int or str key to a 64-bit value (FNV-1a for strings)."""
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK
    if isinstance(key, str):
        h = 0xCBF29CE484222325
        for b in key.encode("utf-8"):
            h = ((h ^ b) * 0x100000001B3) & _MASK
        return h
    raise TypeError(f"rng keys must be int or str, got {type(key).__name__}")


class Rng:
    """Seeded deterministic generator; single-owner, not thread-safe."""

    __slots__ = ("seed", "_count")

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self._count = 0

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, drawn={self._count})"

    def derive(self, *keys) -> "Rng":
        """Child generator keyed by ``keys``; independent of draws so far."""
        s = self.seed
        for key in keys:
            s = _mix64(s ^ _mix64((_fold_key(key) + _GOLDEN) & _MASK))
        return Rng(s)

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit draws."""
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            return _mix64_array(np.uint64(self.seed) + idx * np.uint64(_GOLDEN))

    def uniform(self, lo: float = 0.0, hi: float = 1.0, shape=None) -> np.ndarray | float:
        """Uniform float64 draws in [lo, hi); scalar when shape is None."""
        n = 1 if shape is None else int(np.prod(shape))
        u = (self.u64(n) >> np.uint64(11)).astype(np.float64) / _TWO53
        out = lo + u * (hi - lo)
        if shape is None:
            return float(out[0])
        return out.reshape(shape)

    def random(self) -> float:
        return self.uniform()

    def normal(self, shape) -> np.ndarray:
        """Standard normal draws via Box-Muller pairs (float64)."""
        n = int(np.prod(shape))
        pairs = (n + 1) // 2
        z = self.u64(2 * pairs)
        # u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        u1 = ((z[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO53
        u2 = (z[1::2] >> np.uint64(11)).astype(np.float64) / _TWO53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n].reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n) (argsort of raw 64-bit keys)."""
        return np.argsort(self.u64(n), kind="stable")
