"""NOS encoding: CRC append, segmentation into one-hot indices, codeword
superposition, and the space-time block mapping.

The CRC parity is appended after the information bits and the whole frame
is split left-to-right into V segments of m bits each; segment v selects
codeword ``words[v, :, index]`` via the big-endian bit convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BitArray, as_bits, bits_to_index, index_to_bits
from .codebook import Codebook
from .crc import CRC_DEGREE, crc_append
from .spacetime import reshape_space_time, vectorize_block  # noqa: F401  (re-export)


@dataclass(frozen=True)
class PacketLayout:
    """How many information bits a packet carries and how it segments."""

    info_bits: int
    v: int
    m: int
    crc_bits: int = CRC_DEGREE

    def __post_init__(self):
        if self.v * self.m != self.info_bits + self.crc_bits:
            raise ValueError(
                f"V*m = {self.v * self.m} must equal info+crc = "
                f"{self.info_bits + self.crc_bits}")
        if self.info_bits <= 0:
            raise ValueError("info_bits must be positive")

    @property
    def frame_bits(self) -> int:
        return self.info_bits + self.crc_bits

    @classmethod
    def for_codebook(cls, cb: Codebook) -> "PacketLayout":
        m = int(np.log2(cb.m))
        return cls(info_bits=cb.v * m - CRC_DEGREE, v=cb.v, m=m)


def frame_to_indices(frame, layout: PacketLayout) -> np.ndarray:
    """Split a CRC-appended frame into V big-endian segment indices."""
    frame = as_bits(frame)
    if frame.size != layout.frame_bits:
        raise ValueError(f"frame has {frame.size} bits, layout wants {layout.frame_bits}")
    return np.array([bits_to_index(frame[v * layout.m:(v + 1) * layout.m])
                     for v in range(layout.v)], dtype=np.int64)


def indices_to_frame(indices, layout: PacketLayout) -> BitArray:
    """Inverse of :func:`frame_to_indices`."""
    indices = np.asarray(indices)
    if indices.size != layout.v:
        raise ValueError(f"need {layout.v} indices, got {indices.size}")
    return np.concatenate([index_to_bits(int(i), layout.m) for i in indices])


def encode(msg, cb: Codebook, layout: PacketLayout) -> tuple[np.ndarray, np.ndarray]:
    """Information bits -> (segment indices, superimposed signal of length D/2)."""
    msg = as_bits(msg)
    if msg.size != layout.info_bits:
        raise ValueError(f"message has {msg.size} bits, layout wants {layout.info_bits}")
    if cb.v != layout.v or cb.m != (1 << layout.m):
        raise ValueError("codebook dimensions do not match the packet layout")
    indices = frame_to_indices(crc_append(msg), layout)
    s = cb.words[np.arange(layout.v), :, indices].sum(axis=0)
    return indices, s
