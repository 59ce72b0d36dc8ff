"""Replayable uniform seed streams.

A stream is identified by ``(master_seed, path)``. The path is a short tuple
of non-negative integers (replicate id, purpose id, ...) hashed together with
the master seed by :class:`numpy.random.SeedSequence`, which keys a Philox
counter-based generator. Deriving a child stream is O(1) and never touches the
parent's state, so the output of a replicate does not depend on which worker
runs it or in which order.

Every uniform consumes exactly one 64-bit Philox word and is mapped to the
open interval (0, 1) as ``((w >> 12) + 0.5) / 2**52``; with 52 bits the
largest value ``1 - 2**-53`` is exactly representable.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

DEFAULT_SEED = 20240

_MASK64 = (1 << 64) - 1
_INV_2_52 = 1.0 / 4503599627370496.0


class SeedStream:
    """Single-owner source of uniforms on (0, 1).

    Attributes:
        master_seed: 64-bit master seed.
        path: tuple of non-negative integers identifying the stream.
        cursor: number of uniforms consumed since construction or rewind.
    """

    def __init__(self, master_seed: int, path: Sequence[int] = ()):
        master_seed = int(master_seed)
        if master_seed < 0:
            master_seed &= _MASK64
        path = tuple(int(p) for p in path)
        if any(p < 0 for p in path):
            raise ValueError(f"stream path entries must be non-negative, got {path}")
        self.master_seed = master_seed & _MASK64
        self.path = path
        self.cursor = 0
        self._bitgen = self._fresh()

    def _fresh(self) -> np.random.Philox:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Philox(seq)

    def __repr__(self):
        return f"SeedStream(master_seed={self.master_seed}, path={self.path}, cursor={self.cursor})"

    def child(self, *path: int) -> "SeedStream":
        """Independent stream whose path extends this one's."""
        return SeedStream(self.master_seed, self.path + tuple(path))

    def rewind(self) -> None:
        """Restart the sequence from position 0."""
        self._bitgen = self._fresh()
        self.cursor = 0

    def uniforms(self, size: int) -> np.ndarray:
        size = int(size)
        if size < 0:
            raise ValueError("size must be non-negative")
        words = self._bitgen.random_raw(size)
        self.cursor += size
        return ((words >> np.uint64(12)).astype(np.float64) + 0.5) * _INV_2_52

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])


def derive_stream(master_seed: int, path: Iterable[int] = ()) -> SeedStream:
    """Stream for ``(master_seed, path)``; a pure function of its arguments."""
    return SeedStream(master_seed, tuple(path))


def uniform_block(stream: SeedStream, n: int, k: int) -> np.ndarray:
    """Materialize an ``n x k`` block of seeds, row ``i`` driving observation ``i``.

    The block is filled row-major from the stream, so rewinding the stream and
    asking again returns the identical block.
    """
    if int(n) < 1 or int(k) < 1:
        raise ValueError(f"uniform_block needs n >= 1 and k >= 1, got n={n}, k={k}")
    return stream.uniforms(int(n) * int(k)).reshape(int(n), int(k))
