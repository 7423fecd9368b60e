"""FastAPI application exposing the simulation toolkit.

Long-running work (PER sweeps, candidate-miss runs) goes through a job
endpoint and is polled; analysis, validation and single-packet decodes
answer synchronously.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..codebook import (HistSummary, correlation_report,
                        empirical_post_channel_report, hist_csv_rows,
                        load_codebook)
from ..bits import master_rng
from ..errors import ArtifactError
from ..sim import (miss_csv_text, result_csv_text, run_candidate_miss,
                   run_sweep, decode_one)
from ..validate import validate_artifacts
from .jobs import JobRegistry
from .models import (AnalyzeRequest, AnalyzeResponse, CheckModel,
                     CorrelationModel, DecodeOneRequest, HealthResponse,
                     HistBin, HistModel, JobCreated, JobStatus,
                     MissPointModel, MissRateJobRequest, MissRateResultModel,
                     SimResultModel, SweepJobRequest, ValidateRequest,
                     ValidateResponse)


def _hist_model(summary: HistSummary | None) -> HistModel | None:
    if summary is None:
        return None
    max_db = summary.max_db
    return HistModel(count=summary.count,
                     max_db=None if max_db == float("-inf") else max_db,
                     bins=[HistBin(bin_low_db=lo, bin_high_db=hi, count=c)
                           for lo, hi, c in hist_csv_rows(summary)])


def create_app() -> FastAPI:
    app = FastAPI(title="noslink", version=__version__)
    registry = JobRegistry()
    app.state.jobs = registry

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/validate-artifacts", response_model=ValidateResponse)
    def validate(req: ValidateRequest):
        if not req.codebook and not req.weights:
            raise HTTPException(422, "give a codebook and/or weights path")
        checks = validate_artifacts(req.codebook, req.weights)
        return ValidateResponse(ok=all(c.ok for c in checks),
                                checks=[CheckModel(name=c.name, ok=c.ok,
                                                   detail=c.detail)
                                        for c in checks])

    @app.post("/analyze-codebook", response_model=AnalyzeResponse)
    def analyze(req: AnalyzeRequest):
        try:
            cb = load_codebook(req.codebook)
        except (ArtifactError, OSError) as exc:
            raise HTTPException(400, str(exc))
        pre = correlation_report(cb.words, cb.word_energy)
        resp = AnalyzeResponse(
            v=cb.v, m=cb.m, d=cb.d,
            pre=CorrelationModel(normalizer=pre.normalizer,
                                 inter=_hist_model(pre.inter),
                                 intra=_hist_model(pre.intra)))
        if req.channels > 0:
            if not req.nt or not req.nr:
                raise HTTPException(422, "post-channel analysis needs nt and nr")
            post = empirical_post_channel_report(cb, req.channels, req.nt,
                                                 req.nr, master_rng(req.seed))
            resp.post = CorrelationModel(normalizer=post.normalizer,
                                         inter=_hist_model(post.inter),
                                         intra=_hist_model(post.intra),
                                         mean_word_energy=post.mean_word_energy)
        return resp

    @app.post("/decode-one")
    def decode_one_endpoint(req: DecodeOneRequest):
        try:
            return decode_one(req.config.to_config(), req.snr_db,
                              req.packet_index)
        except (ArtifactError, OSError, ValueError) as exc:
            raise HTTPException(400, str(exc))

    @app.post("/jobs/sweep", response_model=JobCreated)
    def submit_sweep(req: SweepJobRequest):
        try:
            cfg = req.config.to_config()
        except ValueError as exc:
            raise HTTPException(422, str(exc))

        def work(job):
            def progress(snr_index, packets, errors):
                job.progress = {"snr_index": snr_index, "packets": packets,
                                "packet_errors": errors}
            result = run_sweep(cfg, progress=progress)
            return SimResultModel.from_result(result, result_csv_text(result))

        return JobCreated(job_id=registry.submit("sweep", work).job_id)

    @app.post("/jobs/miss-rate", response_model=JobCreated)
    def submit_miss_rate(req: MissRateJobRequest):
        try:
            cfg = req.config.to_config()
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        iters, packets = list(req.iters), req.packets

        def work(job):
            points = run_candidate_miss(cfg, iters, packets)
            return MissRateResultModel(
                points=[MissPointModel.from_point(p) for p in points],
                csv=miss_csv_text(points))

        return JobCreated(job_id=registry.submit("miss_rate", work).job_id)

    @app.get("/jobs/{job_id}", response_model=JobStatus)
    def job_status(job_id: str):
        job = registry.get(job_id)
        if job is None:
            raise HTTPException(404, f"no such job {job_id}")
        return JobStatus(job_id=job.job_id, kind=job.kind, status=job.status,
                         progress=job.progress, error=job.error,
                         result=job.result)

    return app


app = create_app()
