"""Inference-only neural receiver: MMSE equalisation, residual compensation
network, and per-segment decoder networks.

Weights travel in a self-describing binary container (magic ``NOSW``):

    bytes 0..3    magic b"NOSW"
    bytes 4..5    version u16 LE (currently 1)
    bytes 6..9    header length u32 LE
    then          UTF-8 JSON header
    then          all parameters as 32-bit little-endian floats

The JSON header carries the model dimensions and, per section
(``enc`` x V, ``res``, ``dec`` x V), an ordered layer list.  Layer kinds:

    affine      params W (out x in, row-major) then bias (out)
    batch_norm  params gamma, beta, running_mean, running_var (4 x dim)
    relu        no params
    power_norm  no params; rescales to the squared norm given in the header
    softmax     no params

The parameter blob is packed section by section (enc 0..V-1, res,
dec 0..V-1) in layer order.  Normalisation layers run with the stored
running statistics; the activation is whatever the layer list says, so
architecture variants need no format change.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ArtifactFormatError, ArtifactInvariantError, ArtifactShapeError
from .spacetime import complexify, realify, vectorize_block

WEIGHTS_MAGIC = b"NOSW"
WEIGHTS_VERSION = 1
BN_EPS = 1e-5


@dataclass
class Layer:
    kind: str
    in_dim: int
    out_dim: int
    params: dict = field(default_factory=dict)
    energy: float | None = None  # power_norm target squared norm


@dataclass
class ModelDims:
    v: int
    d: int
    m: int
    n_t: int
    n_r: int
    m_c: int
    h1: int
    h2: int

    @property
    def g(self) -> int:
        return 2 * self.n_r * (self.n_t + 1)


@dataclass
class NosWeights:
    """Full artifact: V encoders, the residual module, V decoders."""

    dims: ModelDims
    enc: list[list[Layer]]
    res: list[Layer]
    dec: list[list[Layer]]


# ---------------------------------------------------------------------------
# layer forward passes


def forward_layers(x: np.ndarray, layers: list[Layer]) -> np.ndarray:
    """Run a layer list on a batch ``x`` of shape (batch, in_dim)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    for layer in layers:
        if layer.kind == "affine":
            x = x @ layer.params["w"].T + layer.params["b"]
        elif layer.kind == "batch_norm":
            p = layer.params
            x = (x - p["mean"]) / np.sqrt(p["var"] + BN_EPS) * p["gamma"] + p["beta"]
        elif layer.kind == "relu":
            x = np.maximum(x, 0.0)
        elif layer.kind == "power_norm":
            norms = np.linalg.norm(x, axis=1, keepdims=True)
            x = x * (np.sqrt(layer.energy) / norms)
        elif layer.kind == "softmax":
            z = x - x.max(axis=1, keepdims=True)
            e = np.exp(z)
            x = e / e.sum(axis=1, keepdims=True)
        else:
            raise ArtifactFormatError(f"unknown layer kind {layer.kind!r}")
    return x


# ---------------------------------------------------------------------------
# container I/O

_PARAM_LAYOUT = {
    "affine": lambda l: [("w", (l.out_dim, l.in_dim)), ("b", (l.out_dim,))],
    "batch_norm": lambda l: [("gamma", (l.out_dim,)), ("beta", (l.out_dim,)),
                             ("mean", (l.out_dim,)), ("var", (l.out_dim,))],
    "relu": lambda l: [],
    "power_norm": lambda l: [],
    "softmax": lambda l: [],
}


def _layer_to_json(layer: Layer) -> dict:
    spec = {"kind": layer.kind, "in": layer.in_dim, "out": layer.out_dim}
    if layer.kind == "power_norm":
        spec["energy"] = layer.energy
    return spec


def _layer_from_json(spec: dict) -> Layer:
    kind = spec.get("kind")
    if kind not in _PARAM_LAYOUT:
        raise ArtifactFormatError(f"unknown layer kind {kind!r}")
    return Layer(kind=kind, in_dim=int(spec["in"]), out_dim=int(spec["out"]),
                 energy=spec.get("energy"))


def _iter_sections(w: NosWeights):
    for v, layers in enumerate(w.enc):
        yield f"enc{v}", layers
    yield "res", w.res
    for v, layers in enumerate(w.dec):
        yield f"dec{v}", layers


def save_weights(w: NosWeights, path) -> None:
    dims = w.dims
    header = {
        "dims": {"v": dims.v, "d": dims.d, "m": dims.m, "n_t": dims.n_t,
                 "n_r": dims.n_r, "m_c": dims.m_c, "h1": dims.h1, "h2": dims.h2},
        "bn_eps": BN_EPS,
        "enc": [[_layer_to_json(l) for l in layers] for layers in w.enc],
        "res": [_layer_to_json(l) for l in w.res],
        "dec": [[_layer_to_json(l) for l in layers] for layers in w.dec],
    }
    blob = []
    for _, layers in _iter_sections(w):
        for layer in layers:
            for name, shape in _PARAM_LAYOUT[layer.kind](layer):
                arr = np.asarray(layer.params[name], dtype=np.float32)
                if arr.shape != shape:
                    raise ArtifactShapeError(
                        f"{layer.kind}.{name}: have {arr.shape}, want {shape}")
                blob.append(arr.ravel())
    payload = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(WEIGHTS_MAGIC)
        f.write(struct.pack("<HI", WEIGHTS_VERSION, len(payload)))
        f.write(payload)
        if blob:
            f.write(np.concatenate(blob).astype("<f4").tobytes())


def load_weights(path) -> NosWeights:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != WEIGHTS_MAGIC:
        raise ArtifactFormatError("not a NOSW weights file (bad magic)")
    version, header_len = struct.unpack_from("<HI", raw, 4)
    if version != WEIGHTS_VERSION:
        raise ArtifactFormatError(f"unsupported weights version {version}")
    try:
        header = json.loads(raw[10:10 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArtifactFormatError(f"malformed weights header: {exc}") from exc

    d = header["dims"]
    dims = ModelDims(v=int(d["v"]), d=int(d["d"]), m=int(d["m"]),
                     n_t=int(d["n_t"]), n_r=int(d["n_r"]), m_c=int(d["m_c"]),
                     h1=int(d["h1"]), h2=int(d["h2"]))
    w = NosWeights(
        dims=dims,
        enc=[[_layer_from_json(s) for s in layers] for layers in header["enc"]],
        res=[_layer_from_json(s) for s in header["res"]],
        dec=[[_layer_from_json(s) for s in layers] for layers in header["dec"]],
    )

    data = np.frombuffer(raw[10 + header_len:], dtype="<f4")
    offset = 0
    for _, layers in _iter_sections(w):
        for layer in layers:
            for name, shape in _PARAM_LAYOUT[layer.kind](layer):
                size = int(np.prod(shape))
                if offset + size > data.size:
                    raise ArtifactShapeError("weights blob shorter than header declares")
                layer.params[name] = data[offset:offset + size].astype(
                    np.float64).reshape(shape)
                offset += size
    if offset != data.size:
        raise ArtifactShapeError("weights blob longer than header declares")
    _validate_chain(w)
    return w


def _validate_chain(w: NosWeights) -> None:
    dims = w.dims

    def check(layers: list[Layer], want_in: int, want_out: int, name: str):
        cur = want_in
        for layer in layers:
            if layer.in_dim != cur:
                raise ArtifactInvariantError(
                    f"{name}: layer {layer.kind} expects input {layer.in_dim}, chain has {cur}")
            cur = layer.out_dim
        if cur != want_out:
            raise ArtifactInvariantError(f"{name}: chain ends at {cur}, want {want_out}")

    if len(w.enc) != dims.v or len(w.dec) != dims.v:
        raise ArtifactInvariantError("encoder/decoder section count != V")
    for v in range(dims.v):
        check(w.enc[v], dims.m, dims.d, f"enc{v}")
        check(w.dec[v], dims.d, dims.m, f"dec{v}")
    check(w.res, dims.g, 2 * dims.n_t, "res")
    target = dims.d / (2 * dims.v)
    for v in range(dims.v):
        last = w.enc[v][-1]
        if last.kind != "power_norm":
            raise ArtifactInvariantError(f"enc{v} must end with a power_norm layer")
        if abs(last.energy - target) > 1e-6 * target:
            raise ArtifactInvariantError(
                f"enc{v} power_norm energy {last.energy} != D/2V = {target}")


# ---------------------------------------------------------------------------
# receiver operations


def mmse_equalize(Y: np.ndarray, H: np.ndarray, sigma2: float,
                  p: float = 1.0) -> np.ndarray:
    """(H'H + sigma2/p I)^-1 H' Y; falls back to the pseudo-inverse when
    sigma2 = 0 (zero-forcing limit, also covers rank-deficient H)."""
    Y = np.asarray(Y)
    H = np.asarray(H)
    if Y.shape[0] != H.shape[0]:
        raise ValueError("row count of Y must match receive antennas of H")
    if sigma2 == 0:
        return np.linalg.pinv(H) @ Y
    n_t = H.shape[1]
    gram = H.conj().T @ H + (sigma2 / p) * np.eye(n_t)
    return np.linalg.solve(gram, H.conj().T @ Y)


def residual_detect(Y: np.ndarray, H: np.ndarray, w: NosWeights,
                    sigma2: float) -> np.ndarray:
    """Residual-assisted detection: realified MMSE output plus the Res
    network applied column-wise to Cat(realify(Y), realify(vec(H))).

    Returns the real-valued equalised signal of length D (first D/2 entries
    the real part, rest the imaginary part of the codeword-domain estimate).
    """
    dims = w.dims
    n_r, n_t = H.shape
    if (n_t, n_r) != (dims.n_t, dims.n_r):
        raise ValueError(f"weights trained for {dims.n_t}x{dims.n_r}, "
                         f"channel is {n_t}x{n_r}")
    if Y.shape != (dims.n_r, dims.m_c):
        raise ValueError(f"Y must be {(dims.n_r, dims.m_c)}, got {Y.shape}")

    x_mmse = realify(mmse_equalize(Y, H, sigma2))          # (2 n_t, m_c)
    h_vec = realify(vectorize_block(H))                    # (2 n_t n_r,)
    cat = np.vstack([realify(Y), np.tile(h_vec[:, None], (1, dims.m_c))])
    res_out = forward_layers(cat.T, w.res).T               # (2 n_t, m_c)
    x_equ = x_mmse + res_out
    s_hat = vectorize_block(complexify(x_equ))             # (d/2,) complex
    return np.concatenate([s_hat.real, s_hat.imag])


def decode_probs(x_equ: np.ndarray, w: NosWeights) -> np.ndarray:
    """Per-segment probability vectors, shape (V, M); rows sum to 1."""
    x_equ = np.asarray(x_equ, dtype=np.float64).ravel()
    if x_equ.size != w.dims.d:
        raise ValueError(f"equalised signal must have length {w.dims.d}")
    return np.vstack([forward_layers(x_equ, layers)[0] for layers in w.dec])


def nn_decode_indices(Y: np.ndarray, H: np.ndarray, w: NosWeights,
                      sigma2: float) -> np.ndarray:
    """Hard decision per segment: argmax of each probability vector."""
    probs = decode_probs(residual_detect(Y, H, w, sigma2), w)
    return probs.argmax(axis=1)
