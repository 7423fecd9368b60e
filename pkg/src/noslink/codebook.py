"""Learned-codebook data model, portable file format, enumeration from
encoder weights, post-channel transformation, and correlation analysis.

Codebook file format (magic ``NOSC``), little-endian:

    bytes 0..3    magic b"NOSC"
    bytes 4..5    version u16 (currently 1)
    bytes 6..7    V u16
    bytes 8..11   M u32
    bytes 12..15  D u32
    then          real parts, float32, shape (V, D/2, M) in C order
    then          imaginary parts, same layout

Every codeword carries squared norm D/(2V); loading re-verifies this.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .bits import complex_gaussian
from .errors import ArtifactFormatError, ArtifactInvariantError, ArtifactShapeError
from .receiver import NosWeights, forward_layers

CODEBOOK_MAGIC = b"NOSC"
CODEBOOK_VERSION = 1
ENERGY_RTOL = 1e-5

# histogram resolution used by the correlation reports
HIST_LO_DB = -40.0
HIST_HI_DB = 5.0
HIST_STEP_DB = 0.5


@dataclass(frozen=True)
class Codebook:
    """Complex codeword tensor of shape (V, D/2, M)."""

    words: np.ndarray

    @property
    def v(self) -> int:
        return self.words.shape[0]

    @property
    def d(self) -> int:
        return 2 * self.words.shape[1]

    @property
    def m(self) -> int:
        return self.words.shape[2]

    @property
    def word_energy(self) -> float:
        """Nominal squared norm of every codeword, D/(2V)."""
        return self.d / (2 * self.v)

    def validate(self) -> None:
        if self.words.ndim != 3:
            raise ArtifactShapeError("codebook tensor must be 3-D (V, D/2, M)")
        m = self.m
        if m < 1 or (m & (m - 1)) != 0:
            raise ArtifactInvariantError(f"M = {m} is not a power of two")
        energies = np.sum(np.abs(self.words) ** 2, axis=1)  # (V, M)
        rel = np.abs(energies - self.word_energy) / self.word_energy
        worst = float(rel.max())
        if worst >= ENERGY_RTOL:
            v, mm = np.unravel_index(int(rel.argmax()), rel.shape)
            raise ArtifactInvariantError(
                f"codeword ({v},{mm}) energy off by {worst:.2e} relative "
                f"(limit {ENERGY_RTOL:.0e})")


@dataclass(frozen=True)
class PostChannelCodebook:
    """Codebook as seen through one channel realisation, shape (V, N_r*M_c, M)."""

    words_h: np.ndarray
    n_t: int
    n_r: int
    m_c: int

    @property
    def v(self) -> int:
        return self.words_h.shape[0]

    @property
    def m(self) -> int:
        return self.words_h.shape[2]


def save_codebook(cb: Codebook, path) -> None:
    cb.validate()
    with open(path, "wb") as f:
        f.write(CODEBOOK_MAGIC)
        f.write(struct.pack("<HHII", CODEBOOK_VERSION, cb.v, cb.m, cb.d))
        f.write(cb.words.real.astype("<f4").tobytes())
        f.write(cb.words.imag.astype("<f4").tobytes())


def load_codebook(path, validate: bool = True) -> Codebook:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != CODEBOOK_MAGIC:
        raise ArtifactFormatError("not a NOSC codebook file (bad magic)")
    version, v, m, d = struct.unpack_from("<HHII", raw, 4)
    if version != CODEBOOK_VERSION:
        raise ArtifactFormatError(f"unsupported codebook version {version}")
    if d % 2:
        raise ArtifactShapeError(f"D = {d} must be even")
    count = v * (d // 2) * m
    payload = raw[16:]
    if len(payload) != 2 * count * 4:
        raise ArtifactShapeError(
            f"payload holds {len(payload)} bytes, header implies {8 * count}")
    data = np.frombuffer(payload, dtype="<f4")
    shape = (v, d // 2, m)
    words = (data[:count].astype(np.float64).reshape(shape)
             + 1j * data[count:].astype(np.float64).reshape(shape))
    cb = Codebook(words=words)
    if validate:
        cb.validate()
    return cb


def enumerate_codebook(weights: NosWeights) -> Codebook:
    """Materialise the codeword lookup table from trained encoder weights.

    Column m of slice v is the complex packing (first D/2 entries real part,
    last D/2 imaginary) of encoder v's normalised forward pass on one-hot m.
    """
    dims = weights.dims
    one_hots = np.eye(dims.m)
    half = dims.d // 2
    words = np.empty((dims.v, half, dims.m), dtype=np.complex128)
    for v in range(dims.v):
        out = forward_layers(one_hots, weights.enc[v])  # (M, D)
        if out.shape != (dims.m, dims.d):
            raise ArtifactShapeError(
                f"enc{v} forward pass produced {out.shape}, want {(dims.m, dims.d)}")
        words[v] = (out[:, :half] + 1j * out[:, half:]).T
    return Codebook(words=words)


def apply_channel_to_codebook(cb: Codebook, H: np.ndarray, n_t: int,
                              m_c: int) -> PostChannelCodebook:
    """Push every codeword through H using the shared space-time reshape."""
    if n_t * m_c != cb.d // 2:
        raise ValueError(f"n_t*m_c = {n_t * m_c} != D/2 = {cb.d // 2}")
    H = np.asarray(H)
    if H.shape[1] != n_t:
        raise ValueError(f"H has {H.shape[1]} columns, need n_t = {n_t}")
    n_r = H.shape[0]
    # (V, M, m_c, n_t): row t of the last two axes is S.T's row = time slot t
    blocks = cb.words.transpose(0, 2, 1).reshape(cb.v, cb.m, m_c, n_t)
    faded = blocks @ H.T  # (V, M, m_c, n_r) = (H S).T per word
    words_h = faded.reshape(cb.v, cb.m, n_r * m_c).transpose(0, 2, 1)
    return PostChannelCodebook(words_h=words_h, n_t=n_t, n_r=n_r, m_c=m_c)


# ---------------------------------------------------------------------------
# correlation analysis


@dataclass
class HistSummary:
    """Distribution summary of correlation entries, in dB re the normaliser."""

    count: int
    max_linear: float
    bin_edges: np.ndarray  # (n_bins + 1,)
    counts: np.ndarray     # (n_bins,) integer

    @property
    def max_db(self) -> float:
        if self.count == 0 or self.max_linear <= 0:
            return -np.inf
        return 10.0 * np.log10(self.max_linear)

    def merge(self, other: "HistSummary") -> "HistSummary":
        return HistSummary(count=self.count + other.count,
                           max_linear=max(self.max_linear, other.max_linear),
                           bin_edges=self.bin_edges,
                           counts=self.counts + other.counts)


@dataclass
class CorrelationReport:
    inter: HistSummary | None  # None when V < 2
    intra: HistSummary
    normalizer: float
    mean_word_energy: float | None = None  # post-channel aggregate only


def _hist_edges() -> np.ndarray:
    n = int(round((HIST_HI_DB - HIST_LO_DB) / HIST_STEP_DB))
    return HIST_LO_DB + HIST_STEP_DB * np.arange(n + 1)


def _summarize(values: np.ndarray) -> HistSummary:
    """Histogram linear-domain entries on the fixed dB grid.

    Non-positive entries have no dB value and clamp into the lowest bin,
    as do entries below the grid; entries above clamp into the top bin.
    """
    edges = _hist_edges()
    values = np.asarray(values, dtype=np.float64).ravel()
    counts = np.zeros(edges.size - 1, dtype=np.int64)
    if values.size:
        db = np.full(values.shape, HIST_LO_DB - 1.0)
        pos = values > 0
        db[pos] = 10.0 * np.log10(values[pos])
        idx = np.clip(np.floor((db - HIST_LO_DB) / HIST_STEP_DB).astype(np.int64),
                      0, counts.size - 1)
        np.add.at(counts, idx, 1)
    return HistSummary(count=int(values.size),
                       max_linear=float(values.max()) if values.size else 0.0,
                       bin_edges=edges, counts=counts)


def correlation_report(words: np.ndarray, normalizer: float) -> CorrelationReport:
    """Inter/intra correlation summary of a (V, L, M) codeword tensor.

    Inter entries are |Re(<c_i_k, c_j_l>)| / normalizer over ordered pairs
    of distinct slices; intra entries are the signed Re(<c_i_k, c_i_l>) /
    normalizer for k != l, of which only positive values are summarised.
    """
    words = np.asarray(words)
    v = words.shape[0]
    m = words.shape[2]
    offdiag = ~np.eye(m, dtype=bool)

    inter = None
    intra = None
    for i in range(v):
        for j in range(v):
            gram = (words[i].conj().T @ words[j]).real / normalizer  # (M, M)
            if i == j:
                vals = gram[offdiag]
                part = _summarize(vals[vals > 0])
                intra = part if intra is None else intra.merge(part)
            else:
                part = _summarize(np.abs(gram))
                inter = part if inter is None else inter.merge(part)
    return CorrelationReport(inter=inter, intra=intra, normalizer=normalizer)


def empirical_post_channel_report(cb: Codebook, n_channels: int, n_t: int,
                                  n_r: int, rng: np.random.Generator
                                  ) -> CorrelationReport:
    """Aggregate post-channel correlations over random channel draws.

    The normaliser is the expected received codeword energy N_r * D/(2V);
    the achieved mean energy over all draws is reported alongside.
    """
    if n_channels < 1:
        raise ValueError("need at least one channel draw")
    m_c = cb.d // 2 // n_t
    if n_t * m_c != cb.d // 2:
        raise ValueError(f"n_t = {n_t} does not divide D/2 = {cb.d // 2}")
    normalizer = n_r * cb.word_energy
    inter = intra = None
    energy_sum = 0.0
    energy_n = 0
    for _ in range(n_channels):
        H = complex_gaussian(rng, n_r, n_t, var=1.0)
        pccb = apply_channel_to_codebook(cb, H, n_t, m_c)
        rep = correlation_report(pccb.words_h, normalizer)
        if rep.inter is not None:
            inter = rep.inter if inter is None else inter.merge(rep.inter)
        intra = rep.intra if intra is None else intra.merge(rep.intra)
        energies = np.sum(np.abs(pccb.words_h) ** 2, axis=1)
        energy_sum += float(energies.sum())
        energy_n += energies.size
    return CorrelationReport(inter=inter, intra=intra, normalizer=normalizer,
                             mean_word_energy=energy_sum / energy_n)


def hist_csv_rows(summary: HistSummary) -> list[tuple[float, float, int]]:
    """(bin_low_db, bin_high_db, count) rows for CSV export."""
    edges = summary.bin_edges
    return [(float(edges[i]), float(edges[i + 1]), int(c))
            for i, c in enumerate(summary.counts)]


def make_random_codebook(rng: np.random.Generator, v: int, d: int,
                         m: int) -> Codebook:
    """Gaussian codebook normalised to the energy invariant (testing aid)."""
    words = complex_gaussian(rng, v * m, d // 2, var=1.0)
    words = words.reshape(v, m, d // 2).transpose(0, 2, 1)
    norms = np.linalg.norm(words, axis=1, keepdims=True)
    words = words * (np.sqrt(d / (2 * v)) / norms)
    return Codebook(words=words)
