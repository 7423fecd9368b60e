"""Space-time reshaping and vectorisation conventions.

Every place that moves between a length-D/2 complex signal vector and an
antennas x time-slots block must use these helpers.  The convention is
antenna-major within each time slot:

    S[a, t] = s[t * n_t + a]

i.e. the block is filled column by column (column = time slot).  This is
exactly Fortran-order reshaping, and the matching vectorisation of a
received block Y is y[t * n_r + r] = Y[r, t] (stacked columns).  The
post-channel codebook construction relies on the same pairing, so the two
must never diverge.
"""

from __future__ import annotations

import numpy as np


def reshape_space_time(s: np.ndarray, n_t: int, m_c: int) -> np.ndarray:
    """Length n_t*m_c vector -> (n_t, m_c) block, antenna-major per slot."""
    s = np.asarray(s).ravel()
    if s.size != n_t * m_c:
        raise ValueError(f"signal length {s.size} != n_t*m_c = {n_t * m_c}")
    return s.reshape(m_c, n_t).T


def vectorize_block(block: np.ndarray) -> np.ndarray:
    """Inverse of :func:`reshape_space_time`: stack columns into a vector."""
    block = np.asarray(block)
    if block.ndim != 2:
        raise ValueError("expected a 2-D block")
    return block.T.reshape(-1)


def realify(x: np.ndarray) -> np.ndarray:
    """Complex array -> real array, real parts stacked before imaginary.

    Vectors double in length; matrices double their row count.
    """
    x = np.asarray(x)
    return np.concatenate([x.real, x.imag], axis=0)


def complexify(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify` (first half real part, second half imag)."""
    x = np.asarray(x)
    n = x.shape[0]
    if n % 2:
        raise ValueError("leading dimension must be even")
    return x[: n // 2] + 1j * x[n // 2:]
