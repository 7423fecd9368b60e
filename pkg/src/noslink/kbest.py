"""CRC-assisted looped K-best tree search over the post-channel codebook.

Scores follow the recursive metric

    s_child = s_parent + ||c||^2 + 2 Re(c' u_parent - c' y)

with the root at score 0, so a survivor's score always equals the direct
L2 distance ||y - u||^2 minus the constant ||y||^2.  The loop phase
cancels the earliest-decoded layer from every survivor (subtracting the
exact terms that layer contributed), re-expands it over all M children,
and keeps the K best *distinct* index tuples.  Re-picking the removed
index is always available, so the best score is non-increasing over loop
iterations.

Sorting modes decide the decode order:

    sequential  layers in transmit order
    per_layer   the remaining layer whose best child metric (evaluated on
                the current best survivor) is smallest, shared by all
                survivors
    per_branch  the same rule evaluated per survivor, so each survivor may
                follow its own order

Duplicate elimination compares index tuples, not floating-point score
equality; ties in selection break deterministically by (ancestor rank,
child index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import PostChannelCodebook
from .crc import crc_check
from .encoder import PacketLayout, indices_to_frame

SORTING_MODES = ("sequential", "per_layer", "per_branch")


@dataclass(frozen=True)
class DecodeConfig:
    k: int = 16
    iterations: int = 0
    sorting: str = "per_layer"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.sorting not in SORTING_MODES:
            raise ValueError(f"sorting must be one of {SORTING_MODES}")


@dataclass
class Survivor:
    """One live path: assigned index per layer (-1 if unvisited), the
    accumulated codeword sum, and the score metric."""

    indices: np.ndarray
    u: np.ndarray
    score: float


@dataclass
class DecodeStats:
    layers_processed: int = 0
    metric_evals: int = 0
    order_evals: int = 0
    survivors: int = 0


@dataclass
class DecodeResult:
    bits: np.ndarray | None
    crc_pass: bool
    candidates: list[tuple[np.ndarray, float]]
    stats: DecodeStats
    trace: list[dict] | None = None


def decode_stats(result: DecodeResult) -> dict:
    """Complexity counters of a decode, for reporting."""
    s = result.stats
    return {"layers_processed": s.layers_processed,
            "metric_evals": s.metric_evals,
            "order_evals": s.order_evals,
            "survivors": s.survivors}


def _words(pccb) -> np.ndarray:
    if isinstance(pccb, PostChannelCodebook):
        return pccb.words_h
    return np.asarray(pccb)


def child_scores(parent: Survivor, layer: int, pccb, y: np.ndarray) -> np.ndarray:
    """Scores of all M children of ``parent`` when expanding ``layer``."""
    words = _words(pccb)
    if parent.indices[layer] >= 0:
        raise ValueError(f"layer {layer} already on the parent's path")
    c = words[layer]  # (L, M)
    cross = (c.conj() * (parent.u - np.asarray(y))[:, None]).sum(axis=0).real
    return parent.score + np.sum(np.abs(c) ** 2, axis=0) + 2.0 * cross


def select_top_k(cand: np.ndarray, k: int, distinct: bool = False,
                 parent_indices: np.ndarray | None = None,
                 layers: np.ndarray | None = None
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep the k smallest candidate scores.

    ``cand`` is (parents, children); returns (ancestor rank, child index,
    score) triples sorted ascending, ties broken by ancestor rank then
    child index.  In distinct mode, candidates whose full index tuple
    (``parent_indices`` row with ``layers`` entry replaced by the child)
    duplicates an earlier one are skipped.
    """
    cand = np.atleast_2d(np.asarray(cand, dtype=np.float64))
    n_parents, n_children = cand.shape
    order = np.argsort(cand.ravel(), kind="stable")
    if not distinct:
        sel = order[:k]
        return sel // n_children, sel % n_children, cand.ravel()[sel]

    if parent_indices is None or layers is None:
        raise ValueError("distinct selection needs parent indices and layers")
    layers = np.broadcast_to(np.asarray(layers), (n_parents,))
    anc_out, child_out, score_out = [], [], []
    seen: set[bytes] = set()
    flat = cand.ravel()
    for pos in order:
        anc = int(pos // n_children)
        child = int(pos % n_children)
        key_row = parent_indices[anc].copy()
        key_row[layers[anc]] = child
        key = key_row.tobytes()
        if key in seen:
            continue
        seen.add(key)
        anc_out.append(anc)
        child_out.append(child)
        score_out.append(flat[pos])
        if len(anc_out) == k:
            break
    return (np.array(anc_out, dtype=np.int64), np.array(child_out, dtype=np.int64),
            np.array(score_out, dtype=np.float64))


def choose_next_layer(survivors: list[Survivor], remaining, pccb, y: np.ndarray,
                      sorting: str):
    """Next layer(s) to expand.

    Returns a single layer id for sequential/per_layer sorting, or one id
    per survivor for per_branch sorting.
    """
    remaining = sorted(remaining)
    if not remaining:
        raise ValueError("no remaining layers")
    if sorting == "sequential":
        return remaining[0]
    words = _words(pccb)
    y = np.asarray(y)

    def best_layer(surv: Survivor) -> int:
        options = [v for v in remaining if surv.indices[v] < 0]
        if not options:
            raise ValueError("survivor has no remaining layers")
        best_v, best_val = options[0], np.inf
        for v in options:
            val = child_scores(surv, v, words, y).min()
            if val < best_val:
                best_v, best_val = v, val
        return best_v

    if sorting == "per_layer":
        best = min(survivors, key=lambda s: s.score)
        return best_layer(best)
    if sorting == "per_branch":
        return np.array([best_layer(s) for s in survivors], dtype=np.int64)
    raise ValueError(f"unknown sorting mode {sorting!r}")


class _Search:
    """Vectorised survivor-set state for one decode call."""

    def __init__(self, words: np.ndarray, y: np.ndarray, cfg: DecodeConfig):
        self.words = words
        self.conj_words = words.conj()
        self.v_count = words.shape[0]
        self.y = np.asarray(y)
        self.cfg = cfg
        self.colnorm = np.sum(np.abs(words) ** 2, axis=1)  # (V, M)
        # Re(c' y) per (layer, child)
        self.inner_y = np.einsum("vlm,l->vm", self.conj_words, self.y).real
        self.base = self.colnorm - 2.0 * self.inner_y
        self.stats = DecodeStats()

        self.scores = np.zeros(1)
        self.u = np.zeros((1, words.shape[1]), dtype=np.complex128)
        self.assign = -np.ones((1, self.v_count), dtype=np.int64)
        self.order = -np.ones((1, self.v_count), dtype=np.int64)

    # -- ordering ----------------------------------------------------------

    def _layer_metric_min(self, row: int, v: int) -> float:
        vals = (self.scores[row] + self.base[v]
                + 2.0 * (self.u[row] @ self.conj_words[v]).real)
        self.stats.order_evals += vals.size
        return float(vals.min())

    def _pick_layers(self, step: int) -> np.ndarray:
        """Layer to expand next, per survivor row."""
        n = self.scores.size
        if self.cfg.sorting == "sequential":
            return np.full(n, step, dtype=np.int64)
        if self.cfg.sorting == "per_layer":
            remaining = np.flatnonzero(self.assign[0] < 0)
            best_row = 0  # survivors are kept sorted by score
            vals = [self._layer_metric_min(best_row, v) for v in remaining]
            return np.full(n, remaining[int(np.argmin(vals))], dtype=np.int64)
        picks = np.empty(n, dtype=np.int64)
        for row in range(n):
            remaining = np.flatnonzero(self.assign[row] < 0)
            vals = [self._layer_metric_min(row, v) for v in remaining]
            picks[row] = remaining[int(np.argmin(vals))]
        return picks

    # -- expansion ---------------------------------------------------------

    def _expand(self, layers: np.ndarray, base_scores: np.ndarray,
                u_base: np.ndarray) -> np.ndarray:
        """Candidate matrix (survivors, M) for per-row layers."""
        n = base_scores.size
        cand = np.empty((n, self.words.shape[2]))
        for v in np.unique(layers):
            rows = np.flatnonzero(layers == v)
            cross = 2.0 * (u_base[rows] @ self.conj_words[v]).real
            cand[rows] = base_scores[rows, None] + self.base[v][None, :] + cross
        self.stats.metric_evals += cand.size
        return cand

    def _commit(self, anc: np.ndarray, child: np.ndarray, scores: np.ndarray,
                layers: np.ndarray, u_base: np.ndarray) -> np.ndarray:
        anc_layers = layers[anc]
        self.u = u_base[anc] + self.words[anc_layers, :, child]
        self.assign = self.assign[anc]
        self.assign[np.arange(anc.size), anc_layers] = child
        self.order = self.order[anc]
        self.scores = scores
        self.stats.layers_processed += 1
        self.stats.survivors = anc.size
        return anc

    def forward_step(self, step: int) -> None:
        layers = self._pick_layers(step)
        cand = self._expand(layers, self.scores, self.u)
        anc, child, scores = select_top_k(cand, self.cfg.k)
        anc = self._commit(anc, child, scores, layers, self.u)
        self.order[:, step] = layers[anc]

    def loop_step(self, loop_index: int) -> None:
        layers = self.order[:, loop_index % self.v_count]
        removed = self.assign[np.arange(self.scores.size), layers]
        c_removed = self.words[layers, :, removed]
        u2 = self.u - c_removed
        # cancel metric: subtract exactly what the removed layer contributed
        cancel_cross = np.einsum("kl,kl->k", c_removed.conj(), u2).real
        t_tilde = (self.scores - self.colnorm[layers, removed]
                   - 2.0 * cancel_cross + 2.0 * self.inner_y[layers, removed])
        cand = self._expand(layers, t_tilde, u2)
        anc, child, scores = select_top_k(cand, self.cfg.k, distinct=True,
                                          parent_indices=self.assign,
                                          layers=layers)
        self._commit(anc, child, scores, layers, u2)

    def snapshot(self, step: int, kind: str, layers: np.ndarray) -> dict:
        return {"step": step, "kind": kind, "layers": layers.copy(),
                "scores": self.scores.copy(), "u": self.u.copy(),
                "indices": self.assign.copy()}


def kbest_decode(y: np.ndarray, pccb, cfg: DecodeConfig,
                 layout: PacketLayout | None = None,
                 trace: bool = False) -> DecodeResult:
    """Full CRC-assisted looped K-best decode of one received vector.

    Without a layout the tree search still runs and returns ranked index
    tuples, but no bit conversion or CRC validation happens (useful for
    ML-oracle comparisons on configurations too small to carry a CRC).
    """
    words = _words(pccb)
    v_count, dim, m_count = words.shape
    if layout is not None and (v_count != layout.v or m_count != (1 << layout.m)):
        raise ValueError("post-channel codebook does not match the packet layout")
    y = np.asarray(y).ravel()
    if y.size != dim:
        raise ValueError(f"received vector has length {y.size}, codebook rows {dim}")

    search = _Search(words, y, cfg)
    records: list[dict] | None = [] if trace else None

    for step in range(v_count):
        search.forward_step(step)
        if records is not None:
            records.append(search.snapshot(step, "forward",
                                           search.order[:, step]))
    for loop_index in range(cfg.iterations):
        layers = search.order[:, loop_index % v_count]
        search.loop_step(loop_index)
        if records is not None:
            records.append(search.snapshot(v_count + loop_index, "loop", layers))

    candidates = [(search.assign[i].copy(), float(search.scores[i]))
                  for i in range(search.scores.size)]
    bits = None
    crc_pass = False
    if layout is not None:
        for indices, _ in candidates:
            frame = indices_to_frame(indices, layout)
            if crc_check(frame):
                bits = frame[:layout.info_bits]
                crc_pass = True
                break
    return DecodeResult(bits=bits, crc_pass=crc_pass, candidates=candidates,
                        stats=search.stats, trace=records)
