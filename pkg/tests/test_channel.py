import math

import numpy as np
import pytest

from noslink.bits import master_rng, random_bits
from noslink.channel import SnrPoint, draw_channel, transmit
from noslink.encoder import PacketLayout, encode, reshape_space_time

from util import zero_mean_random_codebook


def test_sigma2_from_snr_db():
    assert np.isclose(SnrPoint(0.0).sigma2, 1.0)
    assert np.isclose(SnrPoint(10.0).sigma2, 0.1)
    assert SnrPoint(math.inf).sigma2 == 0.0


def test_noiseless_transmit_exact():
    rng = master_rng(1)
    H = draw_channel(rng, 3, 2)
    S = (rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4)))
    Y = transmit(S, H, SnrPoint(math.inf), rng)
    np.testing.assert_array_equal(Y, H @ S)


def test_identity_channel_column():
    rng = master_rng(2)
    S = np.eye(2, dtype=complex)
    Y = transmit(S, np.eye(2, dtype=complex), SnrPoint(30.0), rng)
    assert np.all(np.abs(Y - S) < 0.2)


def test_shape_mismatch():
    rng = master_rng(3)
    with pytest.raises(ValueError):
        transmit(np.zeros((3, 4), dtype=complex), np.zeros((2, 2), dtype=complex),
                 SnrPoint(10.0), rng)


def test_channel_unit_variance():
    rng = master_rng(4)
    H = draw_channel(rng, 200, 200)
    assert abs(float(np.mean(np.abs(H) ** 2)) - 1.0) < 0.02


def test_empirical_snr_at_8db():
    # sample estimate of E||HS||_F^2 / (N_t E||N||_F^2) with a valid codebook
    rng = master_rng(5)
    cb = zero_mean_random_codebook(rng, v=4, d=64, m=256)
    layout = PacketLayout.for_codebook(cb)
    snr = SnrPoint(8.0)
    n_t = n_r = 4
    m_c = cb.d // 2 // n_t
    sig = noise = 0.0
    packets = 6000
    for _ in range(packets):
        msg = random_bits(rng, layout.info_bits)
        _, s = encode(msg, cb, layout)
        S = reshape_space_time(s, n_t, m_c)
        H = draw_channel(rng, n_r, n_t)
        HS = H @ S
        Y = transmit(S, H, snr, rng)
        sig += float(np.sum(np.abs(HS) ** 2))
        noise += float(np.sum(np.abs(Y - HS) ** 2))
    measured_db = 10 * np.log10(sig / (n_t * noise))
    assert abs(measured_db - 8.0) < 0.1
