"""Counter-based random number streams (Philox4x32-10).

Every random quantity in this package is derived from a ``RandomStream``,
a value type holding a 64-bit ``seed`` and a 64-bit ``stream_id``.  The
generator is Philox4x32-10 with

* key      = (seed >> 32, seed & 0xffffffff)
* counter  = (block, bank, stream_lo, stream_hi)   -- c0..c3, c0 fastest

where ``block`` is the running 32-bit block index (with carry into
``bank``'s upper bits avoided by capping block counts) and ``bank``
selects independent sub-sequences of one stream (bank 0: primary words,
bank 1: auxiliary words such as bridge-crossing decisions).  Each block
yields four 32-bit words, consumed in order x0, x1, x2, x3.

Word decodings, fixed for cross-run reproducibility:

* walk steps: each 32-bit word supplies sixteen 2-bit fields, lowest
  bits first; field values 0,1,2,3 map to +e1, -e1, +e2, -e2.
* uniform double: two consecutive words form a 64-bit value
  (first word = high 32 bits); the top 53 bits scale to [0, 1).
* normals: Box-Muller over consecutive uniform pairs.

Distinct ``stream_id`` values give statistically independent sequences
(distinct Philox counters), so sample ``i`` of experiment ``j`` can use
``derive_stream(seed, j, i)`` and be reproduced by any worker layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, uint32, uint64

PHILOX_M0 = uint64(0xD2511F53)
PHILOX_M1 = uint64(0xCD9E8D57)
PHILOX_W0 = uint32(0x9E3779B9)
PHILOX_W1 = uint32(0xBB67AE85)

BANK_MAIN = 0
BANK_AUX = 1


@njit(inline="always")
def philox_block(c0, c1, c2, c3, k0, k1):
    """One Philox4x32-10 block; returns four 32-bit output words."""
    x0 = uint32(c0)
    x1 = uint32(c1)
    x2 = uint32(c2)
    x3 = uint32(c3)
    key0 = uint32(k0)
    key1 = uint32(k1)
    for _ in range(10):
        p0 = PHILOX_M0 * uint64(x0)
        p1 = PHILOX_M1 * uint64(x2)
        hi0 = uint32(p0 >> uint64(32))
        lo0 = uint32(p0)
        hi1 = uint32(p1 >> uint64(32))
        lo1 = uint32(p1)
        y0 = hi1 ^ x1 ^ key0
        y1 = lo1
        y2 = hi0 ^ x3 ^ key1
        y3 = lo0
        x0 = y0
        x1 = y1
        x2 = y2
        x3 = y3
        key0 = uint32(key0 + PHILOX_W0)
        key1 = uint32(key1 + PHILOX_W1)
    return x0, x1, x2, x3


@njit(cache=True)
def _fill_u32(seed, stream_id, bank, block0, out):
    k0 = uint32(uint64(seed) >> uint64(32))
    k1 = uint32(uint64(seed))
    c2 = uint32(uint64(stream_id))
    c3 = uint32(uint64(stream_id) >> uint64(32))
    n = out.shape[0]
    i = 0
    blk = uint64(block0)
    while i < n:
        x0, x1, x2, x3 = philox_block(uint32(blk), uint32(bank), c2, c3, k0, k1)
        out[i] = x0
        if i + 1 < n:
            out[i + 1] = x1
        if i + 2 < n:
            out[i + 2] = x2
        if i + 3 < n:
            out[i + 3] = x3
        i += 4
        blk += uint64(1)
    return blk


@njit(cache=True)
def _fill_uniforms(seed, stream_id, bank, block0, out):
    # two u32 words -> one double in [0, 1)
    k0 = uint32(uint64(seed) >> uint64(32))
    k1 = uint32(uint64(seed))
    c2 = uint32(uint64(stream_id))
    c3 = uint32(uint64(stream_id) >> uint64(32))
    n = out.shape[0]
    i = 0
    blk = uint64(block0)
    while i < n:
        x0, x1, x2, x3 = philox_block(uint32(blk), uint32(bank), c2, c3, k0, k1)
        u = (uint64(x0) << uint64(32)) | uint64(x1)
        out[i] = (u >> uint64(11)) * (1.0 / 9007199254740992.0)
        if i + 1 < n:
            v = (uint64(x2) << uint64(32)) | uint64(x3)
            out[i + 1] = (v >> uint64(11)) * (1.0 / 9007199254740992.0)
        i += 2
        blk += uint64(1)
    return blk


@njit(cache=True)
def _fill_normals(seed, stream_id, bank, block0, out):
    # Box-Muller over uniform pairs; one block -> one normal pair
    k0 = uint32(uint64(seed) >> uint64(32))
    k1 = uint32(uint64(seed))
    c2 = uint32(uint64(stream_id))
    c3 = uint32(uint64(stream_id) >> uint64(32))
    n = out.shape[0]
    i = 0
    blk = uint64(block0)
    while i < n:
        x0, x1, x2, x3 = philox_block(uint32(blk), uint32(bank), c2, c3, k0, k1)
        # u1 in (0, 1] so log(u1) is finite
        u1 = ((((uint64(x0) << uint64(32)) | uint64(x1)) >> uint64(11)) + uint64(1)) * (
            1.0 / 9007199254740992.0
        )
        u2 = (((uint64(x2) << uint64(32)) | uint64(x3)) >> uint64(11)) * (
            1.0 / 9007199254740992.0
        )
        r = np.sqrt(-2.0 * np.log(u1))
        out[i] = r * np.cos(6.283185307179586 * u2)
        if i + 1 < n:
            out[i + 1] = r * np.sin(6.283185307179586 * u2)
        i += 2
        blk += uint64(1)
    return blk


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def derive_stream_id(*ids: int) -> int:
    """Mix an arbitrary tuple of integers into a 64-bit stream id.

    Sequential splitmix64 absorption; collision probability for desk-scale
    experiment layouts is negligible.
    """
    acc = 0x243F6A8885A308D3
    for v in ids:
        acc = _splitmix64(acc ^ (int(v) & 0xFFFFFFFFFFFFFFFF))
    return acc


@dataclass(frozen=True)
class RandomStream:
    """A (seed, stream_id) pair naming one reproducible random sequence."""

    seed: int
    stream_id: int = 0

    def substream(self, *ids: int) -> "RandomStream":
        return RandomStream(self.seed, derive_stream_id(self.stream_id, *ids))

    def words(self, n: int, bank: int = BANK_MAIN, block0: int = 0) -> np.ndarray:
        out = np.empty(n, dtype=np.uint32)
        _fill_u32(np.uint64(self.seed), np.uint64(self.stream_id), bank, block0, out)
        return out

    def uniforms(self, n: int, bank: int = BANK_MAIN, block0: int = 0) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        _fill_uniforms(np.uint64(self.seed), np.uint64(self.stream_id), bank, block0, out)
        return out

    def normals(self, n: int, bank: int = BANK_MAIN, block0: int = 0) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        _fill_normals(np.uint64(self.seed), np.uint64(self.stream_id), bank, block0, out)
        return out


def philox4x32_reference(counter, key, rounds=10):
    """Pure-python Philox4x32 block, used only to cross-check the kernels."""
    x = [c & 0xFFFFFFFF for c in counter]
    k0, k1 = key[0] & 0xFFFFFFFF, key[1] & 0xFFFFFFFF
    for _ in range(rounds):
        p0 = (0xD2511F53 * x[0]) & 0xFFFFFFFFFFFFFFFF
        p1 = (0xCD9E8D57 * x[2]) & 0xFFFFFFFFFFFFFFFF
        x = [
            ((p1 >> 32) ^ x[1] ^ k0) & 0xFFFFFFFF,
            p1 & 0xFFFFFFFF,
            ((p0 >> 32) ^ x[3] ^ k1) & 0xFFFFFFFF,
            p0 & 0xFFFFFFFF,
        ]
        k0 = (k0 + 0x9E3779B9) & 0xFFFFFFFF
        k1 = (k1 + 0xBB67AE85) & 0xFFFFFFFF
    return x
