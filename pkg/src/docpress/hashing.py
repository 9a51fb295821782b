"""Deterministic integer hashing used to synthesize features and weights.

Everything downstream (mock encoders, attention weight init, word
embeddings) derives its values from these mixers, so identical inputs
produce bit-identical arrays on every run and every platform. No global
RNG state is involved anywhere.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """Scramble a 64-bit integer (splitmix-style finalizer)."""
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def _mix64_array(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def chain(*keys: int) -> int:
    """Fold integer keys into a single 64-bit hash, order sensitive."""
    h = 0
    for k in keys:
        h = mix64(h ^ (k & MASK64))
    return h


@lru_cache(maxsize=65536)
def text_key(text: str) -> int:
    """Hash a string to 64 bits via its UTF-8 bytes.

    Cached because document vocabularies repeat heavily; the cache is an
    optimization only and never changes the value.
    """
    h = mix64(len(text))
    for b in text.encode("utf-8"):
        h = mix64(h ^ b)
    return h


def _to_unit(h: np.ndarray) -> np.ndarray:
    # Top 53 bits -> float64 in [0, 1), rescaled to [-1, 1).
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -52) - 1.0


def unit_values(key: int, n: int) -> np.ndarray:
    """n deterministic floats in [-1, 1), a pure function of (key, index)."""
    h = _mix64_array(np.uint64(key & MASK64) ^ np.arange(n, dtype=np.uint64))
    return _to_unit(h)


def unit_grid(key: int, rows: int, cols: int) -> np.ndarray:
    """rows x cols deterministic floats in [-1, 1)."""
    row_h = _mix64_array(np.uint64(key & MASK64) ^ np.arange(rows, dtype=np.uint64))
    grid_h = _mix64_array(row_h[:, None] ^ np.arange(cols, dtype=np.uint64)[None, :])
    return _to_unit(grid_h)


def unit_rows_for_keys(keys: np.ndarray, cols: int) -> np.ndarray:
    """One row of cols floats in [-1, 1) per 64-bit key."""
    keys = np.asarray(keys, dtype=np.uint64)
    h = _mix64_array(keys[:, None] ^ np.arange(cols, dtype=np.uint64)[None, :])
    return _to_unit(h)
