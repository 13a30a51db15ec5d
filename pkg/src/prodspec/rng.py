"""Seeded, stream-separated random number generation.

Every stream is a Philox4x64 counter-based generator keyed by the pair
``(seed, stream_id)``. Different stream ids give disjoint keys, so replicate
``k`` of an experiment can run on any worker and still see the same numbers.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


class RandomStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    The internal counter advances as numbers are drawn; two streams built
    from the same pair produce bit-identical sequences.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = seed
        self.stream_id = stream_id
        key = seed | (stream_id << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def substream(self, stream_id: int) -> "RandomStream":
        """A fresh stream sharing this seed but with another id."""
        return RandomStream(self.seed, stream_id)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"
