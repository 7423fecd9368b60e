"""Monte-Carlo PER/BER evaluation driver.

Each packet owns an RNG substream derived from (seed, snr index, packet
index), so results are bit-identical no matter how packets are spread
over workers, and decoder-knob comparisons on the same seed see the same
messages, channels and noise (paired trials).  The stopping rule is
evaluated at fixed-size batch boundaries for the same reason.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bits import packet_rng, random_bits
from .channel import SnrPoint, draw_channel, transmit
from .codebook import Codebook, apply_channel_to_codebook, load_codebook
from .encoder import PacketLayout, encode, indices_to_frame
from .crc import CRC_DEGREE
from .kbest import DecodeConfig, kbest_decode
from .polar import PolarSpec, qpsk_polar_pipeline
from .receiver import NosWeights, load_weights, nn_decode_indices
from .spacetime import reshape_space_time, vectorize_block

SYSTEMS = ("nos", "polar", "nn_receiver")
WORKER_ENV = "NOSLINK_WORKERS"
_BATCH = 512  # stopping-rule granularity; fixed so results ignore worker count


@dataclass(frozen=True)
class SimConfig:
    system: str
    snr_db: tuple[float, ...]
    v: int
    m: int
    d: int
    n_t: int
    n_r: int
    codebook: str | None = None
    weights: str | None = None
    k: int = 16
    iterations: int = 0
    sorting: str = "per_layer"
    list_size: int = 16
    min_errors: int = 100
    max_packets: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"system must be one of {SYSTEMS}")
        if self.min_errors < 1:
            raise ValueError("min_errors must be >= 1")
        if self.max_packets < 1:
            raise ValueError("max_packets must be >= 1")
        if self.system != "polar" and (self.d // 2) % self.n_t:
            raise ValueError(f"n_t = {self.n_t} must divide D/2 = {self.d // 2}")
        if not self.snr_db:
            raise ValueError("need at least one SNR point")

    @property
    def m_c(self) -> int:
        return self.d // 2 // self.n_t

    @property
    def bits_per_segment(self) -> int:
        return int(math.log2(self.m))

    @property
    def info_bits(self) -> int:
        return self.v * self.bits_per_segment - CRC_DEGREE

    def layout(self) -> PacketLayout:
        return PacketLayout(info_bits=self.info_bits, v=self.v,
                            m=self.bits_per_segment)

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(k=self.k, iterations=self.iterations,
                            sorting=self.sorting)

    def polar_spec(self) -> PolarSpec:
        return PolarSpec(n_info=self.info_bits, n_coded=self.d,
                         list_size=self.list_size)


# ---------------------------------------------------------------------------
# config file handling (flat key = value lines)

_INT_KEYS = {"v", "m", "d", "nt", "nr", "k", "iter", "list_size",
             "min_errors", "max_packets", "seed"}


def parse_config_text(text: str) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip().lower()] = val.strip()
    return values


def config_from_mapping(values: dict) -> SimConfig:
    def get(key, default=None):
        return values.get(key, default)

    snr_raw = get("snr_db")
    if snr_raw is None:
        raise ValueError("config needs snr_db")
    snr = parse_snr_spec(str(snr_raw))
    kwargs = dict(
        system=str(get("system", "nos")),
        snr_db=tuple(snr),
        v=int(get("v")), m=int(get("m")), d=int(get("d")),
        n_t=int(get("nt")), n_r=int(get("nr")),
        codebook=get("codebook") or None,
        weights=get("weights") or None,
        k=int(get("k", 16)),
        iterations=int(get("iter", 0)),
        sorting=str(get("sorting", "per_layer")),
        list_size=int(get("list_size", 16)),
        min_errors=int(get("min_errors", 100)),
        max_packets=int(get("max_packets", 1_000_000)),
        seed=int(get("seed", 0)),
    )
    return SimConfig(**kwargs)


def load_config(path, overrides: dict | None = None) -> SimConfig:
    with open(path, "r", encoding="utf-8") as f:
        values = parse_config_text(f.read())
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(values)


def parse_snr_spec(spec: str) -> list[float]:
    """Either comma-separated values or an inclusive 'start:stop:step' range."""
    spec = spec.strip()
    if ":" in spec:
        parts = [float(p) for p in spec.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError("SNR range must be start:stop:step with step > 0")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(max(count, 0))]
    return [float(p) for p in spec.split(",") if p.strip()]


# ---------------------------------------------------------------------------
# results


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054
                    ) -> tuple[float, float]:
    """95% score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials
                                   + z * z / (4 * trials * trials))
    # clamp away rounding so the interval always brackets the estimate
    return (min(max(0.0, center - half), phat), max(min(1.0, center + half), phat))


@dataclass
class SnrPointResult:
    snr_db: float
    packets: int
    packet_errors: int
    bit_errors: int
    metric_evals: int
    info_bits: int
    wall_s: float = 0.0

    @property
    def per(self) -> float:
        return self.packet_errors / self.packets if self.packets else 0.0

    @property
    def ber(self) -> float:
        total = self.packets * self.info_bits
        return self.bit_errors / total if total else 0.0

    @property
    def per_interval(self) -> tuple[float, float]:
        return wilson_interval(self.packet_errors, self.packets)


@dataclass
class SimResult:
    config: SimConfig
    points: list[SnrPointResult] = field(default_factory=list)


CSV_HEADER = "snr_db,packets,pkt_errors,per,per_lo,per_hi,ber,metric_evals"


def result_csv_text(result: SimResult) -> str:
    lines = [CSV_HEADER]
    for p in result.points:
        lo, hi = p.per_interval
        lines.append(f"{p.snr_db:.10g},{p.packets},{p.packet_errors},"
                     f"{p.per:.10g},{lo:.10g},{hi:.10g},{p.ber:.10g},"
                     f"{p.metric_evals}")
    return "\n".join(lines) + "\n"


def report_csv(result: SimResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(result_csv_text(result))


def parse_result_csv(text: str) -> list[dict]:
    lines = [l for l in text.strip().splitlines() if l]
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        rows.append({k: float(v) for k, v in zip(header, line.split(","))})
    return rows


# ---------------------------------------------------------------------------
# per-packet simulation

_ARTIFACTS: dict = {}


def _get_codebook(path: str) -> Codebook:
    cb = _ARTIFACTS.get(("cb", path))
    if cb is None:
        cb = load_codebook(path)
        _ARTIFACTS[("cb", path)] = cb
    return cb


def _get_weights(path: str) -> NosWeights:
    w = _ARTIFACTS.get(("w", path))
    if w is None:
        w = load_weights(path)
        _ARTIFACTS[("w", path)] = w
    return w


def _check_nos_artifacts(cfg: SimConfig) -> Codebook:
    if not cfg.codebook:
        raise ValueError("NOS simulation needs a codebook path")
    cb = _get_codebook(cfg.codebook)
    if (cb.v, cb.m, cb.d) != (cfg.v, cfg.m, cfg.d):
        raise ValueError(f"codebook is (V={cb.v}, M={cb.m}, D={cb.d}), "
                         f"config wants ({cfg.v}, {cfg.m}, {cfg.d})")
    return cb


def _packet_nos(cfg: SimConfig, snr: SnrPoint, rng) -> tuple[bool, int, int]:
    cb = _check_nos_artifacts(cfg)
    layout = cfg.layout()
    msg = random_bits(rng, layout.info_bits)
    _, s = encode(msg, cb, layout)
    H = draw_channel(rng, cfg.n_r, cfg.n_t)
    Y = transmit(reshape_space_time(s, cfg.n_t, cfg.m_c), H, snr, rng)
    pccb = apply_channel_to_codebook(cb, H, cfg.n_t, cfg.m_c)
    res = kbest_decode(vectorize_block(Y), pccb, cfg.decode_config(), layout)
    if res.bits is not None:
        decoded = res.bits
    else:
        decoded = indices_to_frame(res.candidates[0][0], layout)[: layout.info_bits]
    bit_errs = int(np.count_nonzero(decoded != msg))
    return bit_errs > 0, bit_errs, res.stats.metric_evals


def _packet_polar(cfg: SimConfig, snr: SnrPoint, rng) -> tuple[bool, int, int]:
    spec = cfg.polar_spec()
    msg = random_bits(rng, spec.n_info)
    H = draw_channel(rng, cfg.n_r, cfg.n_t)
    out = qpsk_polar_pipeline(msg, H, snr, rng, spec, cfg.n_t)
    decoded = out.bits if out.bits is not None else out.best_frame[: spec.n_info]
    bit_errs = int(np.count_nonzero(decoded != msg))
    return bit_errs > 0, bit_errs, 0


def _packet_nn(cfg: SimConfig, snr: SnrPoint, rng) -> tuple[bool, int, int]:
    cb = _check_nos_artifacts(cfg)
    if not cfg.weights:
        raise ValueError("nn_receiver simulation needs a weights path")
    w = _get_weights(cfg.weights)
    if (w.dims.n_t, w.dims.n_r) != (cfg.n_t, cfg.n_r):
        raise ValueError(f"weights trained for {w.dims.n_t}x{w.dims.n_r}, "
                         f"config wants {cfg.n_t}x{cfg.n_r}")
    layout = cfg.layout()
    msg = random_bits(rng, layout.info_bits)
    _, s = encode(msg, cb, layout)
    H = draw_channel(rng, cfg.n_r, cfg.n_t)
    Y = transmit(reshape_space_time(s, cfg.n_t, cfg.m_c), H, snr, rng)
    indices = nn_decode_indices(Y, H, w, snr.sigma2)
    decoded = indices_to_frame(indices, layout)[: layout.info_bits]
    bit_errs = int(np.count_nonzero(decoded != msg))
    return bit_errs > 0, bit_errs, 0


_PACKET_FNS = {"nos": _packet_nos, "polar": _packet_polar, "nn_receiver": _packet_nn}


def _run_chunk(cfg: SimConfig, snr_index: int, start: int, count: int
               ) -> tuple[int, int, int]:
    """(packet errors, bit errors, metric evals) over one packet range."""
    fn = _PACKET_FNS[cfg.system]
    snr = SnrPoint(cfg.snr_db[snr_index])
    pkt_errs = bit_errs = evals = 0
    for i in range(start, start + count):
        rng = packet_rng(cfg.seed, snr_index, i)
        err, berr, ev = fn(cfg, snr, rng)
        pkt_errs += int(err)
        bit_errs += berr
        evals += ev
    return pkt_errs, bit_errs, evals


def worker_count() -> int:
    raw = os.environ.get(WORKER_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(cfg: SimConfig, workers: int | None = None,
              progress=None) -> SimResult:
    """Simulate every SNR point until min_errors or max_packets.

    Deterministic for a given (config, seed) regardless of ``workers``.
    """
    if workers is None:
        workers = worker_count()
    result = SimResult(config=cfg)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for snr_index in range(len(cfg.snr_db)):
            t0 = time.monotonic()
            done = pkt_errs = bit_errs = evals = 0
            while done < cfg.max_packets and pkt_errs < cfg.min_errors:
                batch = min(_BATCH, cfg.max_packets - done)
                if pool is None:
                    out = [_run_chunk(cfg, snr_index, done, batch)]
                else:
                    step = (batch + workers - 1) // workers
                    futs = [pool.submit(_run_chunk, cfg, snr_index,
                                        done + off, min(step, batch - off))
                            for off in range(0, batch, step)]
                    out = [f.result() for f in futs]
                for pe, be, ev in out:
                    pkt_errs += pe
                    bit_errs += be
                    evals += ev
                done += batch
                if progress is not None:
                    progress(snr_index, done, pkt_errs)
            result.points.append(SnrPointResult(
                snr_db=cfg.snr_db[snr_index], packets=done,
                packet_errors=pkt_errs, bit_errors=bit_errs,
                metric_evals=evals, info_bits=cfg.info_bits,
                wall_s=time.monotonic() - t0))
    finally:
        if pool is not None:
            pool.shutdown()
    return result


# ---------------------------------------------------------------------------
# candidate miss rate (true sequence absent from the K-best set)


@dataclass
class MissRatePoint:
    snr_db: float
    iterations: int
    packets: int
    misses: int

    @property
    def miss_rate(self) -> float:
        return self.misses / self.packets if self.packets else 0.0


def _miss_chunk(cfg: SimConfig, snr_index: int, start: int, count: int) -> int:
    cb = _check_nos_artifacts(cfg)
    layout = cfg.layout()
    snr = SnrPoint(cfg.snr_db[snr_index])
    dec_cfg = cfg.decode_config()
    misses = 0
    for i in range(start, start + count):
        rng = packet_rng(cfg.seed, snr_index, i)
        msg = random_bits(rng, layout.info_bits)
        indices, s = encode(msg, cb, layout)
        H = draw_channel(rng, cfg.n_r, cfg.n_t)
        Y = transmit(reshape_space_time(s, cfg.n_t, cfg.m_c), H, snr, rng)
        pccb = apply_channel_to_codebook(cb, H, cfg.n_t, cfg.m_c)
        res = kbest_decode(vectorize_block(Y), pccb, dec_cfg, layout)
        if not any(np.array_equal(c, indices) for c, _ in res.candidates):
            misses += 1
    return misses


def run_candidate_miss(cfg: SimConfig, iter_values, n_packets: int,
                       workers: int | None = None) -> list[MissRatePoint]:
    """Miss rate per (SNR, iter), paired across iter values by shared seeds."""
    if cfg.system != "nos":
        raise ValueError("candidate miss rate is defined for the NOS system")
    if workers is None:
        workers = worker_count()
    points = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for snr_index in range(len(cfg.snr_db)):
            for it in iter_values:
                arm = replace(cfg, iterations=int(it))
                if pool is None:
                    misses = _miss_chunk(arm, snr_index, 0, n_packets)
                else:
                    step = (n_packets + workers - 1) // workers
                    futs = [pool.submit(_miss_chunk, arm, snr_index, off,
                                        min(step, n_packets - off))
                            for off in range(0, n_packets, step)]
                    misses = sum(f.result() for f in futs)
                points.append(MissRatePoint(snr_db=cfg.snr_db[snr_index],
                                            iterations=int(it),
                                            packets=n_packets, misses=misses))
    finally:
        if pool is not None:
            pool.shutdown()
    return points


MISS_CSV_HEADER = "snr_db,iter,packets,misses,miss_rate"


def miss_csv_text(points: list[MissRatePoint]) -> str:
    lines = [MISS_CSV_HEADER]
    for p in points:
        lines.append(f"{p.snr_db:.10g},{p.iterations},{p.packets},{p.misses},"
                     f"{p.miss_rate:.10g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# single-packet debug trace


def decode_one(cfg: SimConfig, snr_db: float, packet_index: int = 0) -> dict:
    """Simulate and decode one NOS packet, returning a search trace."""
    cb = _check_nos_artifacts(cfg)
    layout = cfg.layout()
    snr_index = list(cfg.snr_db).index(snr_db) if snr_db in cfg.snr_db else 0
    rng = packet_rng(cfg.seed, snr_index, packet_index)
    snr = SnrPoint(snr_db)
    msg = random_bits(rng, layout.info_bits)
    indices, s = encode(msg, cb, layout)
    H = draw_channel(rng, cfg.n_r, cfg.n_t)
    Y = transmit(reshape_space_time(s, cfg.n_t, cfg.m_c), H, snr, rng)
    pccb = apply_channel_to_codebook(cb, H, cfg.n_t, cfg.m_c)
    res = kbest_decode(vectorize_block(Y), pccb, cfg.decode_config(), layout,
                       trace=True)
    steps = []
    for rec in res.trace:
        layers = np.atleast_1d(rec["layers"])
        steps.append({
            "step": int(rec["step"]),
            "kind": rec["kind"],
            "layers": [int(l) for l in np.unique(layers)],
            "best_score": float(rec["scores"][0]),
            "survivors": int(rec["scores"].size),
            "scores": [float(v) for v in rec["scores"]],
        })
    decoded = res.bits.tolist() if res.bits is not None else None
    return {
        "snr_db": snr_db,
        "true_message": msg.tolist(),
        "true_indices": [int(i) for i in indices],
        "decoded_message": decoded,
        "crc_pass": bool(res.crc_pass),
        "packet_error": decoded != msg.tolist(),
        "candidates": [{"indices": [int(x) for x in c], "score": float(sc)}
                       for c, sc in res.candidates],
        "stats": {"layers_processed": res.stats.layers_processed,
                  "metric_evals": res.stats.metric_evals,
                  "order_evals": res.stats.order_evals},
        "steps": steps,
    }
