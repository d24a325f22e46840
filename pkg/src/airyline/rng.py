"""Counter-based random streams keyed by ``(seed, stream_id)``.

Every sampler takes an :class:`RngStream` (or a live ``numpy.random.Generator``
when called from inside another sampler).  A stream is a value, not a state:
asking it for a generator twice gives two generators that produce the same
numbers, which is what makes replica results independent of scheduling.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK and 0 <= self.stream_id <= _MASK):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *keys: int | str) -> "RngStream":
        """Derive an independent stream from this one and a tuple of keys."""
        h = hashlib.blake2b(digest_size=8)
        h.update(struct.pack("<Q", self.stream_id))
        for key in keys:
            if isinstance(key, str):
                h.update(b"s" + key.encode())
            else:
                h.update(b"i" + struct.pack("<q", int(key)))
        return RngStream(self.seed, int.from_bytes(h.digest(), "little"))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")
