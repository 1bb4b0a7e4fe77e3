"""Packed-bitset helpers for row-set arithmetic on column supports."""

import numpy as np

# Popcount lookup for the vectorized path: one byte at a time.
_POP8 = np.array([bin(v).count("1") for v in range(256)], dtype=np.uint8)


def pack_columns(entries: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix of shape (t, n) into per-column uint64 bit blocks.

    Returns shape (n, ceil(t/64)); bit b of block k in column j mirrors
    entries[64*k + b, j]. Pad bits beyond row t-1 are zero.
    """
    t, n = entries.shape
    nblk = (t + 63) // 64
    padded = np.zeros((nblk * 64, n), dtype=np.uint64)
    padded[:t] = entries
    weights = np.uint64(1) << np.arange(64, dtype=np.uint64)
    blocks = (padded.reshape(nblk, 64, n) * weights[None, :, None]).sum(axis=1)
    return np.ascontiguousarray(blocks.T)


def row_mask(t: int) -> np.ndarray:
    """All-ones bit mask covering rows 0..t-1 with zero pad bits."""
    nblk = (t + 63) // 64
    mask = np.full(nblk, np.uint64(0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    tail = t % 64
    if tail:
        mask[-1] = (np.uint64(1) << np.uint64(tail)) - np.uint64(1)
    return mask


def popcount(blocks: np.ndarray) -> np.ndarray:
    """Per-row popcount of a (..., nblk) uint64 block array."""
    flat = np.ascontiguousarray(blocks).view(np.uint8)
    return _POP8[flat].reshape(blocks.shape[:-1] + (-1,)).sum(axis=-1, dtype=np.int64)
