"""Bit sequences, index conversions and seeded random streams.

Bit sequences are 1-D ``uint8`` numpy arrays with values in {0,1}.  The
bit <-> index convention is big-endian everywhere: the first bit of a
segment is the most significant bit of its index.  Encoder and decoder
must agree on this, so it lives here and nowhere else.
"""

from __future__ import annotations

import numpy as np

BitArray = np.ndarray  # 1-D uint8 array of {0,1}


def as_bits(seq) -> BitArray:
    """Coerce a sequence to a bit array, rejecting empty or non-binary input."""
    bits = np.asarray(seq, dtype=np.uint8).ravel()
    if bits.size == 0:
        raise ValueError("bit sequence must be non-empty")
    if np.any(bits > 1):
        raise ValueError("bit values must be 0 or 1")
    return bits


def random_bits(rng: np.random.Generator, n: int) -> BitArray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def bits_to_index(bits) -> int:
    """Big-endian bit sequence -> integer index (first bit is the MSB)."""
    bits = as_bits(bits)
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def index_to_bits(index: int, m: int) -> BitArray:
    """Integer index -> big-endian bit sequence of length ``m``."""
    if m <= 0:
        raise ValueError("bit width must be positive")
    if not 0 <= index < (1 << m):
        raise ValueError(f"index {index} does not fit in {m} bits")
    shifts = np.arange(m - 1, -1, -1)
    return ((index >> shifts) & 1).astype(np.uint8)


def complex_gaussian(rng: np.random.Generator, rows: int, cols: int,
                     var: float = 1.0) -> np.ndarray:
    """(rows, cols) i.i.d. circular complex Gaussians, element variance ``var``.

    Real and imaginary parts are independent Normal(0, var/2).
    """
    if var <= 0:
        raise ValueError("var must be positive")
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal((rows, cols))
                    + 1j * rng.standard_normal((rows, cols)))


def master_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def packet_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent substream for one packet.

    Derived from (seed, key) only, so results do not depend on how packets
    are scheduled across workers.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))
