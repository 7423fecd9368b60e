"""Pydantic request/response models for the service API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..sim import SimConfig, SimResult, MissRatePoint


class SimConfigModel(BaseModel):
    system: Literal["nos", "polar", "nn_receiver"] = "nos"
    snr_db: list[float] = Field(min_length=1)
    v: int
    m: int
    d: int
    nt: int
    nr: int
    codebook: str | None = None
    weights: str | None = None
    k: int = 16
    iter: int = 0
    sorting: Literal["sequential", "per_layer", "per_branch"] = "per_layer"
    list_size: int = 16
    min_errors: int = 100
    max_packets: int = 1_000_000
    seed: int = 0

    def to_config(self) -> SimConfig:
        return SimConfig(system=self.system, snr_db=tuple(self.snr_db),
                         v=self.v, m=self.m, d=self.d, n_t=self.nt, n_r=self.nr,
                         codebook=self.codebook, weights=self.weights,
                         k=self.k, iterations=self.iter, sorting=self.sorting,
                         list_size=self.list_size, min_errors=self.min_errors,
                         max_packets=self.max_packets, seed=self.seed)

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "SimConfigModel":
        return cls(system=cfg.system, snr_db=list(cfg.snr_db), v=cfg.v, m=cfg.m,
                   d=cfg.d, nt=cfg.n_t, nr=cfg.n_r, codebook=cfg.codebook,
                   weights=cfg.weights, k=cfg.k, iter=cfg.iterations,
                   sorting=cfg.sorting, list_size=cfg.list_size,
                   min_errors=cfg.min_errors, max_packets=cfg.max_packets,
                   seed=cfg.seed)


class SnrPointModel(BaseModel):
    snr_db: float
    packets: int
    packet_errors: int
    bit_errors: int
    metric_evals: int
    per: float
    per_lo: float
    per_hi: float
    ber: float
    wall_s: float


class SimResultModel(BaseModel):
    config: SimConfigModel
    points: list[SnrPointModel]
    csv: str

    @classmethod
    def from_result(cls, result: SimResult, csv: str) -> "SimResultModel":
        points = []
        for p in result.points:
            lo, hi = p.per_interval
            points.append(SnrPointModel(
                snr_db=p.snr_db, packets=p.packets, packet_errors=p.packet_errors,
                bit_errors=p.bit_errors, metric_evals=p.metric_evals,
                per=p.per, per_lo=lo, per_hi=hi, ber=p.ber, wall_s=p.wall_s))
        return cls(config=SimConfigModel.from_config(result.config),
                   points=points, csv=csv)


class MissPointModel(BaseModel):
    snr_db: float
    iter: int
    packets: int
    misses: int
    miss_rate: float

    @classmethod
    def from_point(cls, p: MissRatePoint) -> "MissPointModel":
        return cls(snr_db=p.snr_db, iter=p.iterations, packets=p.packets,
                   misses=p.misses, miss_rate=p.miss_rate)


class MissRateResultModel(BaseModel):
    points: list[MissPointModel]
    csv: str


class SweepJobRequest(BaseModel):
    config: SimConfigModel


class MissRateJobRequest(BaseModel):
    config: SimConfigModel
    iters: list[int] = Field(min_length=1)
    packets: int = Field(gt=0)


class JobCreated(BaseModel):
    job_id: str


class JobStatus(BaseModel):
    job_id: str
    kind: str
    status: Literal["queued", "running", "done", "failed"]
    progress: dict
    error: str | None = None
    result: SimResultModel | MissRateResultModel | None = None


class DecodeOneRequest(BaseModel):
    config: SimConfigModel
    snr_db: float
    packet_index: int = 0


class AnalyzeRequest(BaseModel):
    codebook: str
    channels: int = 0
    nt: int | None = None
    nr: int | None = None
    seed: int = 0


class HistBin(BaseModel):
    bin_low_db: float
    bin_high_db: float
    count: int


class HistModel(BaseModel):
    count: int
    max_db: float | None
    bins: list[HistBin]


class CorrelationModel(BaseModel):
    normalizer: float
    inter: HistModel | None
    intra: HistModel
    mean_word_energy: float | None = None


class AnalyzeResponse(BaseModel):
    v: int
    m: int
    d: int
    pre: CorrelationModel
    post: CorrelationModel | None = None


class ValidateRequest(BaseModel):
    codebook: str | None = None
    weights: str | None = None


class CheckModel(BaseModel):
    name: str
    ok: bool
    detail: str


class ValidateResponse(BaseModel):
    ok: bool
    checks: list[CheckModel]


class HealthResponse(BaseModel):
    status: str
    version: str
