"""Block-fading MIMO channel with exact SNR calibration.

The working SNR definition is SNR = 1/sigma^2 where sigma^2 is the
element-wise variance of the complex noise; this matches the system SNR
E||HS||_F^2 / (N_t E||N||_F^2) when the transmit block is energy
normalised (E||S||_F^2 = D/2 and N_t M_c = D/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bits import complex_gaussian


@dataclass(frozen=True)
class SnrPoint:
    """Operating point; ``snr_db = math.inf`` is the noiseless sentinel."""

    snr_db: float

    @property
    def sigma2(self) -> float:
        if math.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return 10.0 ** (-self.snr_db / 10.0)


def draw_channel(rng: np.random.Generator, n_r: int, n_t: int) -> np.ndarray:
    """One i.i.d. unit-variance complex Gaussian channel realisation."""
    return complex_gaussian(rng, n_r, n_t, var=1.0)


def transmit(S: np.ndarray, H: np.ndarray, snr: SnrPoint,
             rng: np.random.Generator) -> np.ndarray:
    """Y = H S + N with N element-wise variance ``snr.sigma2``."""
    S = np.asarray(S)
    H = np.asarray(H)
    if S.ndim != 2 or H.ndim != 2 or H.shape[1] != S.shape[0]:
        raise ValueError(f"shape mismatch: H {H.shape} vs S {S.shape}")
    Y = H @ S
    if snr.sigma2 > 0:
        Y = Y + complex_gaussian(rng, Y.shape[0], Y.shape[1], var=snr.sigma2)
    return Y
