"""CRC-11 generation and checking.

Generator polynomial x^11 + x^10 + x^9 + x^5 + 1, zero-initialised
register, no reflection, no final inversion.  Parity bits are appended
most-significant coefficient first, so a valid frame has polynomial
remainder zero.  Frames here are tens of bits, bit-serial is plenty.
"""

from __future__ import annotations

import numpy as np

from .bits import BitArray, as_bits, index_to_bits

CRC_DEGREE = 11
CRC_POLY = 0b111000100001  # x^11+x^10+x^9+x^5+1, leading coefficient included


def _poly_mod(bits: np.ndarray, pad_zeros: int = 0) -> int:
    """Remainder of the streamed bit polynomial modulo the generator."""
    reg = 0
    top = 1 << CRC_DEGREE
    for b in bits:
        reg = (reg << 1) | int(b)
        if reg & top:
            reg ^= CRC_POLY
    for _ in range(pad_zeros):
        reg <<= 1
        if reg & top:
            reg ^= CRC_POLY
    return reg


def crc_parity(msg) -> BitArray:
    """11 parity bits for ``msg`` (remainder of msg(x) * x^11)."""
    msg = as_bits(msg)
    return index_to_bits(_poly_mod(msg, pad_zeros=CRC_DEGREE), CRC_DEGREE)


def crc_append(msg) -> BitArray:
    """Append 11 parity bits so that ``crc_check`` passes on the result."""
    msg = as_bits(msg)
    return np.concatenate([msg, crc_parity(msg)])


def crc_check(frame) -> bool:
    """True iff the frame polynomial is divisible by the generator."""
    frame = as_bits(frame)
    if frame.size <= CRC_DEGREE:
        raise ValueError(f"frame must be longer than {CRC_DEGREE} bits")
    return _poly_mod(frame) == 0
