"""Seeded uniform streams.

Each stream is a Philox-4x64 counter-based generator keyed by
``(seed, stream)``; the counter starts at zero. A uniform variate is
``(next_uint64 >> 11) * 2**-53``. Philox is a published algorithm with
fixed round constants, so a stream is reproducible in any language that
implements it.
"""
from __future__ import annotations

import secrets

import numpy as np

DEFAULT_SEED = 20240607
MASK64 = (1 << 64) - 1


def entropy_seed() -> int:
    return secrets.randbits(64)


class RngStream:
    """Uniform [0, 1) variates from the stream ``(seed, stream)``."""

    def __init__(self, seed: int = DEFAULT_SEED, stream: int = 0):
        if not (0 <= seed <= MASK64 and 0 <= stream <= MASK64):
            raise ValueError("seed and stream must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.stream], dtype=np.uint64))
        )

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` consecutive variates; same values as ``n`` calls to uniform()."""
        return self._gen.random(n)

    def spawn(self, stream: int) -> RngStream:
        return RngStream(self.seed, stream)
