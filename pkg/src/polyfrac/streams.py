"""Deterministic random bit streams.

Streams are derived from a 64-bit run seed plus a label path, e.g.
(seed, "point", 3, "coord", 1, "block", 2).  Bytes come from keyed BLAKE2b in
counter mode, so the same (seed, labels) always yields the same bits on every
platform and Python version.
"""

from __future__ import annotations

import hashlib

__all__ = ["BitStream"]


def _derive_key(seed: int, labels: tuple) -> bytes:
    h = hashlib.blake2b(digest_size=32)
    h.update(int(seed).to_bytes(8, "big", signed=False))
    for lab in labels:
        h.update(b"/")
        h.update(str(lab).encode("utf-8"))
    return h.digest()


class BitStream:
    """Counter-mode deterministic bit source for one labelled stream."""

    __slots__ = ("_key", "_counter", "_buf", "_nbits")

    def __init__(self, seed: int, *labels):
        if not 0 <= seed < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self._key = _derive_key(seed, labels)
        self._counter = 0
        self._buf = 0
        self._nbits = 0

    def _refill(self) -> None:
        block = hashlib.blake2b(self._counter.to_bytes(8, "big"),
                                key=self._key, digest_size=64).digest()
        self._counter += 1
        self._buf = (self._buf << 512) | int.from_bytes(block, "big")
        self._nbits += 512

    def take_bits(self, n: int) -> int:
        """Next n bits as an integer in [0, 2**n)."""
        if n < 0:
            raise ValueError("bit count must be >= 0")
        while self._nbits < n:
            self._refill()
        self._nbits -= n
        out = self._buf >> self._nbits
        self._buf &= (1 << self._nbits) - 1
        return out

    def take_bit(self) -> int:
        return self.take_bits(1)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("range must be positive")
        k = (n - 1).bit_length()
        while True:
            v = self.take_bits(k)
            if v < n:
                return v
