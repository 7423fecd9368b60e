import itertools
import math

import numpy as np
import pytest

from noslink.bits import master_rng, random_bits
from noslink.channel import SnrPoint, draw_channel
from noslink.crc import crc_append
from noslink.polar import (LLR_CLIP, PolarSpec, ml_mimo_llr, polar_encode,
                           polar_transform, qpsk_map, qpsk_polar_pipeline,
                           reliability_sequence, scl_decode)

from util import polar_generator_matrix, sc_decode_oracle


# ---------------------------------------------------------------------------
# reliability sequence and code construction


@pytest.mark.parametrize("n", [8, 32, 128, 1024])
def test_sequence_is_permutation(n):
    seq = reliability_sequence(n)
    assert sorted(seq) == list(range(n))


def test_sequence_respects_binary_domination():
    n = 256
    seq = reliability_sequence(n)
    rank = np.empty(n, dtype=int)
    rank[list(seq)] = np.arange(n)
    for i in range(n):
        for j in range(n):
            if i != j and (i & j) == j:
                assert rank[i] >= rank[j]


def test_sequence_nested_across_sizes():
    small = [i for i in reliability_sequence(1024) if i < 128]
    assert small == list(reliability_sequence(128))


def test_spec_shortening_freezes_tail():
    spec = PolarSpec(n_info=37, n_coded=96, list_size=8)
    assert spec.mother_n == 128
    assert np.all(spec.info_positions < 96)
    assert spec.info_positions.size == 48


def test_spec_rejects_oversized_payload():
    with pytest.raises(ValueError):
        PolarSpec(n_info=60, n_coded=64, list_size=4)


# ---------------------------------------------------------------------------
# encoding


def test_all_zero_frame_encodes_to_zero():
    spec = PolarSpec(n_info=21, n_coded=64)
    np.testing.assert_array_equal(polar_encode(np.zeros(32, np.uint8), spec),
                                  np.zeros(64, np.uint8))


def test_last_input_row_is_all_ones():
    u = np.zeros(8, np.uint8)
    u[7] = 1
    np.testing.assert_array_equal(polar_transform(u), np.ones(8, np.uint8))


def test_transform_matches_generator_matrix():
    rng = master_rng(1)
    G = polar_generator_matrix(8)
    for _ in range(100):
        u = random_bits(rng, 8)
        np.testing.assert_array_equal(polar_transform(u), (u @ G) % 2)


def test_shortened_positions_are_zero():
    rng = master_rng(2)
    spec = PolarSpec(n_info=37, n_coded=96, list_size=8)
    for _ in range(20):
        frame = random_bits(rng, 48)
        u = np.zeros(spec.mother_n, np.uint8)
        u[spec.info_positions] = frame
        full = polar_transform(u)
        assert not full[96:].any()


# ---------------------------------------------------------------------------
# decoding


def test_noiseless_llrs_recover_exactly():
    rng = master_rng(3)
    spec = PolarSpec(n_info=21, n_coded=64, list_size=4)
    for _ in range(50):
        msg = random_bits(rng, 21)
        coded = polar_encode(crc_append(msg), spec)
        llr = np.where(coded == 0, np.inf, -np.inf)
        out = scl_decode(llr, spec)
        assert out.crc_pass
        np.testing.assert_array_equal(out.bits, msg)


def test_scl_l1_equals_sc_oracle():
    rng = master_rng(4)
    spec = PolarSpec(n_info=21, n_coded=64, list_size=1, n_crc=11)
    for _ in range(400):
        msg = random_bits(rng, 21)
        coded = polar_encode(crc_append(msg), spec)
        llr = (1.0 - 2.0 * coded) * 2.0 + rng.normal(0, 1.5, 64)
        out = scl_decode(llr, spec)
        np.testing.assert_array_equal(out.frames[0][0],
                                      sc_decode_oracle(llr, spec))


def test_exhaustive_scl_equals_bruteforce_ml():
    rng = master_rng(5)
    spec = PolarSpec(n_info=4, n_coded=8, list_size=16, n_crc=0)
    codewords = {combo: polar_encode(np.array(combo, np.uint8), spec)
                 for combo in itertools.product((0, 1), repeat=4)}
    for _ in range(500):
        frame = random_bits(rng, 4)
        coded = polar_encode(frame, spec)
        yv = (1.0 - 2.0 * coded) + rng.normal(0, 0.8, 8)
        llr = 2.0 * yv / 0.8 ** 2
        out = scl_decode(llr, spec)
        best, best_m = None, np.inf
        for combo, cw in codewords.items():
            m = llr[cw == 1].sum()
            if m < best_m:
                best_m, best = m, combo
        assert tuple(out.frames[0][0]) == best


def test_path_metrics_nondecreasing_and_sorted():
    rng = master_rng(6)
    spec = PolarSpec(n_info=21, n_coded=64, list_size=8)
    msg = random_bits(rng, 21)
    coded = polar_encode(crc_append(msg), spec)
    llr = (1.0 - 2.0 * coded) * 2.0 + rng.normal(0, 1.0, 64)
    out = scl_decode(llr, spec)
    pms = [pm for _, pm in out.frames]
    assert all(pms[i] <= pms[i + 1] for i in range(len(pms) - 1))
    assert all(pm >= -1e-12 for pm in pms)


# ---------------------------------------------------------------------------
# QPSK mapping and ML LLRs


def test_qpsk_map_convention():
    syms = qpsk_map(np.array([0, 0, 1, 1, 0, 1, 1, 0], dtype=np.uint8))
    np.testing.assert_allclose(syms[0], (1 + 1j) / np.sqrt(2))
    np.testing.assert_allclose(syms[1], (-1 - 1j) / np.sqrt(2))
    np.testing.assert_allclose(syms[2], (1 - 1j) / np.sqrt(2))
    np.testing.assert_allclose(syms[3], (-1 + 1j) / np.sqrt(2))
    np.testing.assert_allclose(np.abs(syms), 1.0)


def test_llr_scalar_closed_form():
    y = np.array([0.4 - 0.9j])
    H = np.array([[1.0 + 0j]])
    s2 = 0.7
    llr = ml_mimo_llr(y, H, s2)
    np.testing.assert_allclose(llr[0], 2 * np.sqrt(2) * y[0].real / s2, rtol=1e-12)
    np.testing.assert_allclose(llr[1], 2 * np.sqrt(2) * y[0].imag / s2, rtol=1e-12)


def test_llr_noiseless_signs_match_point():
    rng = master_rng(7)
    H = draw_channel(rng, 2, 2)
    bits = np.array([0, 1, 1, 0], dtype=np.uint8)
    x = qpsk_map(bits)
    y = H @ x
    llr = ml_mimo_llr(y, H, sigma2=1e-6)
    assert np.all(np.sign(llr) == (1.0 - 2.0 * bits))
    exact = ml_mimo_llr(y, H, sigma2=0.0)
    assert np.all(np.abs(exact) == LLR_CLIP)
    assert np.all(np.sign(exact) == (1.0 - 2.0 * bits))


def test_llr_matches_naive_double_sum():
    rng = master_rng(8)
    for _ in range(50):
        H = draw_channel(rng, 2, 2)
        y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        s2 = float(rng.uniform(0.2, 2.0))
        fast = ml_mimo_llr(y, H, s2)
        from noslink.polar import _qpsk_enumeration
        bits_tab, syms = _qpsk_enumeration(2)
        for k in range(4):
            num = sum(math.exp(-float(np.sum(np.abs(y - H @ syms[i]) ** 2)) / s2)
                      for i in range(16) if bits_tab[i, k] == 0)
            den = sum(math.exp(-float(np.sum(np.abs(y - H @ syms[i]) ** 2)) / s2)
                      for i in range(16) if bits_tab[i, k] == 1)
            assert abs(fast[k] - math.log(num / den)) < 1e-9


def test_llr_sign_flips_with_transmitted_bit():
    rng = master_rng(9)
    H = draw_channel(rng, 2, 2)
    for k in range(4):
        bits = np.zeros(4, dtype=np.uint8)
        y0 = H @ qpsk_map(bits)
        bits[k] = 1
        y1 = H @ qpsk_map(bits)
        l0 = ml_mimo_llr(y0, H, 1e-9)
        l1 = ml_mimo_llr(y1, H, 1e-9)
        assert l0[k] > 0 > l1[k]


# ---------------------------------------------------------------------------
# pipeline


def test_noiseless_pipeline_zero_errors():
    rng = master_rng(10)
    spec = PolarSpec(n_info=21, n_coded=64, list_size=8)
    errors = 0
    for _ in range(200):
        msg = random_bits(rng, 21)
        H = draw_channel(rng, 4, 4)
        out = qpsk_polar_pipeline(msg, H, SnrPoint(math.inf), rng, spec, n_t=4)
        if out.bits is None or not np.array_equal(out.bits, msg):
            errors += 1
    assert errors == 0


def test_coded_beats_uncoded_at_moderate_snr():
    rng = master_rng(11)
    spec = PolarSpec(n_info=21, n_coded=64, list_size=8)
    snr = SnrPoint(4.0)
    n_t = 4
    coded_err = uncoded_err = 0
    trials = 250
    for _ in range(trials):
        msg = random_bits(rng, 21)
        H = draw_channel(rng, 4, 4)
        out = qpsk_polar_pipeline(msg, H, snr, rng, spec, n_t)
        coded_err += out.bits is None or not np.array_equal(out.bits, msg)
        # uncoded QPSK of the same payload over the same channel draw
        pad = np.concatenate([msg, np.zeros(3, np.uint8)])  # fill 24 bits
        sym = qpsk_map(pad)
        from noslink.spacetime import reshape_space_time
        from noslink.channel import transmit
        S = reshape_space_time(sym, n_t, 3)
        Y = transmit(S, H, snr, rng)
        hard = []
        for t in range(3):
            llr = ml_mimo_llr(Y[:, t], H, snr.sigma2)
            hard.extend((llr < 0).astype(np.uint8))
        uncoded_err += not np.array_equal(np.array(hard[:21]), msg)
    assert coded_err < uncoded_err
