"""Deterministic random number streams.

Every source of randomness in the package flows through :class:`RngStream`,
a thin wrapper around numpy's counter-based Philox generator.  A stream is
fully identified by ``(seed, stream_id)``: the same pair always replays the
same sequence, and distinct stream ids under one seed give statistically
independent sequences.  Child streams are derived by hashing string tags,
so parallel workers can be handed non-overlapping randomness without any
coordination.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream:
    """A named, replayable random stream.

    Streams are single-owner: concurrent consumers must each hold their own
    stream, obtained via :meth:`derive`, never share one instance.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = self.seed | (self.stream_id << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def derive(self, *tags) -> "RngStream":
        """Return an independent child stream keyed by the given tags.

        The child id is a stable hash of this stream's id and the tags, so
        derivation commutes with process boundaries and replays exactly.
        """
        label = "/".join(str(t) for t in tags)
        raw = f"{self.stream_id}/{label}".encode()
        digest = hashlib.blake2b(raw, digest_size=8).digest()
        return RngStream(self.seed, int.from_bytes(digest, "little"))

    def normal(self, rows: int, cols: int, mean: float = 0.0, stdev: float = 1.0) -> np.ndarray:
        """I.i.d. Gaussian matrix; stdev 0 yields a constant matrix of `mean`."""
        if stdev < 0:
            raise ValueError(f"stdev must be >= 0, got {stdev}")
        if stdev == 0.0:
            return np.full((rows, cols), float(mean))
        return self._gen.normal(mean, stdev, size=(rows, cols))

    def uniform(self, low: float, high: float, rows: int, cols: int) -> np.ndarray:
        return self._gen.uniform(low, high, size=(rows, cols))

    def bernoulli_mask(self, rows: int, cols: int, keep_prob: float) -> np.ndarray:
        """0/1 matrix with each entry independently 1 with probability keep_prob."""
        if not 0.0 <= keep_prob <= 1.0:
            raise ValueError(f"keep_prob must be in [0, 1], got {keep_prob}")
        return (self._gen.random((rows, cols)) < keep_prob).astype(np.float64)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)
