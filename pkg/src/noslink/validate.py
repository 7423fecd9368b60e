"""Artifact invariant gate: load codebook/weights files and verify every
structural and semantic invariant, reporting one named check per rule."""

from __future__ import annotations

from dataclasses import dataclass

from .codebook import load_codebook
from .errors import ArtifactError
from .receiver import load_weights


@dataclass
class Check:
    name: str
    ok: bool
    detail: str


def validate_artifacts(codebook_path: str | None = None,
                       weights_path: str | None = None) -> list[Check]:
    checks: list[Check] = []
    cb = None
    if codebook_path:
        try:
            cb = load_codebook(codebook_path)
            checks.append(Check("codebook.load", True,
                                f"V={cb.v} M={cb.m} D={cb.d}"))
            checks.append(Check("codebook.energy", True,
                                f"all codewords at D/2V = {cb.word_energy:g}"))
        except ArtifactError as exc:
            checks.append(Check("codebook.load", False, str(exc)))
    w = None
    if weights_path:
        try:
            w = load_weights(weights_path)
            dims = w.dims
            checks.append(Check("weights.load", True,
                                f"V={dims.v} D={dims.d} M={dims.m} "
                                f"{dims.n_t}x{dims.n_r} H1={dims.h1} H2={dims.h2}"))
        except ArtifactError as exc:
            checks.append(Check("weights.load", False, str(exc)))
    if cb is not None and w is not None:
        match = (cb.v, cb.d, cb.m) == (w.dims.v, w.dims.d, w.dims.m)
        checks.append(Check("codebook_weights.dims", match,
                            "codebook and weights agree on (V, D, M)" if match
                            else f"codebook ({cb.v},{cb.d},{cb.m}) vs "
                                 f"weights ({w.dims.v},{w.dims.d},{w.dims.m})"))
    return checks
