"""Shared builders and independent oracles for the test suite.

Oracles deliberately recompute results by the most literal route available
(bitwise long division, explicit reshapes and matrix products, exhaustive
enumeration) so they share no code path with the implementations they check.
"""

from __future__ import annotations

import itertools

import numpy as np

from noslink.codebook import Codebook, apply_channel_to_codebook
from noslink.receiver import Layer, ModelDims, NosWeights

CRC_POLY_BITS = np.array([1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1], dtype=np.uint8)


# ---------------------------------------------------------------------------
# codebooks


def orthogonal_codebook(v: int, d: int, m: int) -> Codebook:
    """Mutually orthogonal codewords (needs v*m <= d/2), exact energies."""
    half = d // 2
    assert v * m <= half, "not enough dimensions for an orthogonal design"
    words = np.zeros((v, half, m), dtype=np.complex128)
    scale = np.sqrt(d / (2 * v))
    for i in range(v):
        for j in range(m):
            words[i, i * m + j, j] = scale
    return Codebook(words=words)


def random_codebook(rng: np.random.Generator, v: int, d: int, m: int) -> Codebook:
    half = d // 2
    words = (rng.standard_normal((v, half, m))
             + 1j * rng.standard_normal((v, half, m)))
    norms = np.linalg.norm(words, axis=1, keepdims=True)
    return Codebook(words=words * (np.sqrt(d / (2 * v)) / norms))


def zero_mean_random_codebook(rng: np.random.Generator, v: int, d: int,
                              m: int) -> Codebook:
    """Random codebook with antipodal halves, so each encoder's mean codeword
    is exactly zero and E||s||^2 over random messages is exactly D/2."""
    assert m % 2 == 0
    cb = random_codebook(rng, v, d, m // 2)
    words = np.concatenate([cb.words, -cb.words], axis=2)
    return Codebook(words=words)


# ---------------------------------------------------------------------------
# synthetic receiver weights


def make_weights(rng: np.random.Generator, v=2, d=16, m=16, n_t=2, n_r=2,
                 h1=None, h2=32, zero_res=False) -> NosWeights:
    h1 = h1 or 4 * d
    m_c = d // 2 // n_t
    g = 2 * n_r * (n_t + 1)

    def affine(i, o, zero=False):
        w = np.zeros((o, i)) if zero else rng.normal(0, 0.3, (o, i))
        b = np.zeros(o) if zero else rng.normal(0, 0.1, o)
        return Layer("affine", i, o, {"w": w, "b": b})

    def bn(n):
        return Layer("batch_norm", n, n,
                     {"gamma": np.abs(rng.normal(1, 0.1, n)) + 0.1,
                      "beta": rng.normal(0, 0.1, n),
                      "mean": rng.normal(0, 0.1, n),
                      "var": np.abs(rng.normal(1, 0.1, n)) + 0.1})

    enc = [[affine(m, h1), bn(h1), Layer("relu", h1, h1), affine(h1, d),
            Layer("power_norm", d, d, energy=d / (2 * v))] for _ in range(v)]
    res = [affine(g, h2), bn(h2), Layer("relu", h2, h2),
           affine(h2, 2 * n_t, zero=zero_res)]
    dec = [[affine(d, h1), bn(h1), Layer("relu", h1, h1), affine(h1, m),
            Layer("softmax", m, m)] for _ in range(v)]
    dims = ModelDims(v=v, d=d, m=m, n_t=n_t, n_r=n_r, m_c=m_c, h1=h1, h2=h2)
    return NosWeights(dims=dims, enc=enc, res=res, dec=dec)


# ---------------------------------------------------------------------------
# oracles


def crc_longdiv_oracle(msg_bits: np.ndarray) -> np.ndarray:
    """Parity by explicit polynomial long division on bit arrays."""
    work = np.concatenate([np.asarray(msg_bits, dtype=np.uint8),
                           np.zeros(11, dtype=np.uint8)])
    for i in range(len(work) - 11):
        if work[i]:
            work[i:i + 12] ^= CRC_POLY_BITS
    return work[-11:]


def reshape_oracle(s: np.ndarray, n_t: int, m_c: int) -> np.ndarray:
    """Entry-by-entry antenna-major reshape."""
    S = np.zeros((n_t, m_c), dtype=complex)
    for t in range(m_c):
        for a in range(n_t):
            S[a, t] = s[t * n_t + a]
    return S


def post_channel_oracle(cb: Codebook, H: np.ndarray, n_t: int,
                        m_c: int) -> np.ndarray:
    """Independent reshape + multiply + vectorise per codeword."""
    n_r = H.shape[0]
    out = np.zeros((cb.v, n_r * m_c, cb.m), dtype=complex)
    for v in range(cb.v):
        for mm in range(cb.m):
            S = reshape_oracle(cb.words[v, :, mm], n_t, m_c)
            HS = H @ S
            vec = np.zeros(n_r * m_c, dtype=complex)
            for t in range(m_c):
                for r in range(n_r):
                    vec[t * n_r + r] = HS[r, t]
            out[v, :, mm] = vec
    return out


def brute_force_argmin(y: np.ndarray, words_h: np.ndarray) -> tuple[int, ...]:
    """Exhaustive minimiser of ||y - sum_v C_H[v,:,m_v]||^2."""
    v, _, m = words_h.shape
    best, best_d = None, np.inf
    for combo in itertools.product(range(m), repeat=v):
        u = sum(words_h[i, :, combo[i]] for i in range(v))
        dist = float(np.sum(np.abs(y - u) ** 2))
        if dist < best_d:
            best, best_d = combo, dist
    return best


def noisy_nos_instance(rng, cb: Codebook, n_t, n_r, snr_db):
    """One random packet: true indices, post-channel words, received vector."""
    m_c = cb.d // 2 // n_t
    idx = rng.integers(0, cb.m, size=cb.v)
    s = cb.words[np.arange(cb.v), :, idx].sum(axis=0)
    H = (rng.standard_normal((n_r, n_t))
         + 1j * rng.standard_normal((n_r, n_t))) / np.sqrt(2)
    pccb = apply_channel_to_codebook(cb, H, n_t, m_c)
    S = reshape_oracle(s, n_t, m_c)
    sigma2 = 10 ** (-snr_db / 10)
    noise = (rng.standard_normal((n_r, m_c))
             + 1j * rng.standard_normal((n_r, m_c))) * np.sqrt(sigma2 / 2)
    Y = H @ S + noise
    y = np.zeros(n_r * m_c, dtype=complex)
    for t in range(m_c):
        for r in range(n_r):
            y[t * n_r + r] = Y[r, t]
    return idx, pccb, y


def sc_decode_oracle(llrs: np.ndarray, spec) -> np.ndarray:
    """Plain successive cancellation, recursive, independent of the SCL code."""
    full = np.concatenate([np.asarray(llrs, dtype=float),
                           np.full(spec.mother_n - spec.n_coded, 1e30)])
    is_info = np.zeros(spec.mother_n, dtype=bool)
    is_info[spec.info_positions] = True
    decided = np.zeros(spec.mother_n, dtype=np.uint8)

    def f(a, b):
        mag = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        return mag + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))

    def rec(llr, start):
        if llr.size == 1:
            if is_info[start]:
                decided[start] = 1 if llr[0] < 0 else 0
            x = np.array([decided[start]], dtype=np.uint8)
            return x
        h = llr.size // 2
        a, b = llr[:h], llr[h:]
        xl = rec(f(a, b), start)
        xr = rec(b + (1.0 - 2.0 * xl) * a, start + h)
        return np.concatenate([xl ^ xr, xr])

    rec(full, 0)
    return decided[spec.info_positions]


def polar_generator_matrix(n: int) -> np.ndarray:
    """F^{kron log2 n} built by explicit Kronecker products."""
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    G = np.array([[1]], dtype=np.uint8)
    while G.shape[0] < n:
        G = np.kron(G, F)
    return G
