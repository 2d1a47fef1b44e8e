"""Patch-selection strategies.

The adaptive pruner keeps patches whose importance strictly exceeds a
document-specific threshold mu + k*sigma, falling back to the single
most important patch when nothing survives.  The remaining strategies
are the fixed-ratio / fixed-threshold variants and the random,
attention-plus-similarity, and pivot-threshold baselines.

All pruners guarantee a non-empty keep set and return the original
embedding rows untouched.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .container import DocumentRecord
from .errors import DegenerateVector, MissingGlobalEmbedding, UnsupportedMethod
from .importance import ImportanceScores
from .numerics import mean, std_pop

# integer-count formulas get an epsilon so 1-ulp float noise in
# ratio*L cannot move the count off the exact-arithmetic value
_COUNT_EPS = 1e-9

PRUNE_METHODS = (
    "docpruner",
    "attention_ratio",
    "attention_threshold",
    "random",
    "attn_plus_sim",
    "pivot_threshold",
)

# adaptation-factor grid used throughout the evaluation sweeps
DEFAULT_K_GRID = (-0.5, -0.25, 0.0, 0.25, 0.5, 1.0)
DEFAULT_RATIO_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
DEFAULT_ALPHA_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
DEFAULT_NUM_PIVOTS = 10
DEFAULT_K_DUP = 1.0


@dataclass(frozen=True)
class PruneConfig:
    """Hyperparameters for one pruning run; only the fields relevant to
    ``method`` are consulted."""

    method: str
    k: float = -0.25
    ratio: float = 0.0
    fixed_threshold: float = 0.0
    alpha: float = 0.5
    k_dup: float = DEFAULT_K_DUP
    num_pivots: int = DEFAULT_NUM_PIVOTS
    seed: int = 0


@dataclass(frozen=True)
class PrunedDocument:
    """Surviving patches of one document."""

    doc_id: str
    kept_indices: np.ndarray  # strictly increasing original indices
    kept_embeddings: np.ndarray  # (L'_d, P)
    pruning_ratio: float
    threshold_used: float | None
    method_tag: str


def _build(doc: DocumentRecord, kept: np.ndarray, threshold: float | None, tag: str) -> PrunedDocument:
    kept = np.sort(np.asarray(kept, dtype=np.int64))
    return PrunedDocument(
        doc_id=doc.doc_id,
        kept_indices=kept,
        kept_embeddings=doc.embeddings[kept].copy(),
        pruning_ratio=1.0 - kept.shape[0] / doc.num_patches,
        threshold_used=threshold,
        method_tag=tag,
    )


def adaptive_threshold(scores: ImportanceScores, k: float) -> float:
    """Document-specific threshold tau = mu + k * sigma."""
    return scores.mu + k * scores.sigma


def _keep_above(values: np.ndarray, threshold: float) -> np.ndarray:
    """Indices with value strictly above threshold; argmax fallback.

    np.argmax returns the first maximum, which is the lowest-index
    tie-break the contract requires.
    """
    kept = np.flatnonzero(values > threshold)
    if kept.size == 0:
        kept = np.array([int(np.argmax(values))], dtype=np.int64)
    return kept


def docpruner_prune(doc: DocumentRecord, scores: ImportanceScores, k: float) -> PrunedDocument:
    """Adaptive pruning: keep patches with importance > mu + k*sigma."""
    tau = adaptive_threshold(scores, k)
    kept = _keep_above(scores.scores, tau)
    return _build(doc, kept, tau, "docpruner")


def attention_ratio_prune(doc: DocumentRecord, scores: ImportanceScores, ratio: float) -> PrunedDocument:
    """Keep the top max(1, ceil((1-ratio)*L)) patches by importance."""
    num = doc.num_patches
    keep_count = max(1, math.ceil((1.0 - ratio) * num - _COUNT_EPS))
    # stable sort on negated scores: descending by score, ties by lowest index
    order = np.argsort(-scores.scores, kind="stable")
    kept = order[:keep_count]
    return _build(doc, kept, None, "attention_ratio")


def attention_threshold_prune(
    doc: DocumentRecord, scores: ImportanceScores, fixed_threshold: float
) -> PrunedDocument:
    """Keep patches with importance strictly above a fixed global value."""
    kept = _keep_above(scores.scores, fixed_threshold)
    return _build(doc, kept, fixed_threshold, "attention_threshold")


def _rng_for(seed: int, doc_id: str) -> np.random.Generator:
    # stream depends only on (seed, doc_id): corpus runs are reproducible
    # regardless of document processing order
    digest = hashlib.blake2b(doc_id.encode("utf-8"), digest_size=16).digest()
    words = [int.from_bytes(digest[i : i + 8], "little") for i in (0, 8)]
    return np.random.default_rng([seed, *words])


def random_prune(doc: DocumentRecord, ratio: float, seed: int) -> PrunedDocument:
    """Remove floor(ratio*L) patches uniformly at random, never the last one."""
    num = doc.num_patches
    remove_count = min(int(math.floor(ratio * num + _COUNT_EPS)), num - 1)
    rng = _rng_for(seed, doc.doc_id)
    removed = rng.choice(num, size=remove_count, replace=False)
    mask = np.ones(num, dtype=bool)
    mask[removed] = False
    return _build(doc, np.flatnonzero(mask), None, "random")


def _minmax(values: np.ndarray) -> np.ndarray:
    """Min-max normalize; a constant component carries no information
    and is zeroed rather than rejected."""
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def _cosine_rows(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    vec_norm = float(np.linalg.norm(vector))
    if vec_norm == 0.0 or np.any(norms == 0.0):
        raise DegenerateVector("cosine similarity of a zero-norm vector")
    return (matrix @ vector) / (norms * vec_norm)


def attn_plus_sim_prune(
    doc: DocumentRecord, scores: ImportanceScores, k: float, alpha: float
) -> PrunedDocument:
    """Composite of attention importance and similarity to the global token.

    c_j = alpha * minmax(I)_j + (1-alpha) * minmax(cos(d_j, global))_j,
    thresholded adaptively at mu_c + k*sigma_c.
    """
    if doc.global_embedding is None:
        raise MissingGlobalEmbedding(
            f"document {doc.doc_id!r} lacks the global-token embedding"
        )
    importance_part = _minmax(scores.scores)
    similarity_part = _minmax(_cosine_rows(doc.embeddings, doc.global_embedding))
    composite = alpha * importance_part + (1.0 - alpha) * similarity_part
    tau = mean(composite) + k * std_pop(composite)
    kept = _keep_above(composite, tau)
    return _build(doc, kept, tau, "attn_plus_sim")


def pivot_threshold_prune(
    doc: DocumentRecord,
    scores: ImportanceScores,
    k: float,
    k_dup: float,
    num_pivots: int,
) -> PrunedDocument:
    """Two-stage pruning: adaptive importance filter, then de-duplication
    of non-pivot patches that are too similar to the pivots."""
    tau = adaptive_threshold(scores, k)
    important = _keep_above(scores.scores, tau)

    if important.size <= num_pivots:
        return _build(doc, important, tau, "pivot_threshold")

    # pivots = highest-importance members of the important set
    order = np.argsort(-scores.scores[important], kind="stable")
    pivots = important[order[:num_pivots]]
    non_pivots = important[order[num_pivots:]]

    pivot_rows = doc.embeddings[pivots]
    dup = np.empty(non_pivots.shape[0], dtype=np.float64)
    for i, j in enumerate(non_pivots):
        dup[i] = _cosine_rows(pivot_rows, doc.embeddings[j]).max()

    # duplication statistics over the non-pivot scores only
    dup_tau = mean(dup) + k_dup * std_pop(dup)
    survivors = non_pivots[~(dup > dup_tau)]
    kept = np.concatenate([pivots, survivors])
    return _build(doc, kept, tau, "pivot_threshold")


def prune(doc: DocumentRecord, scores: ImportanceScores, config: PruneConfig) -> PrunedDocument:
    """Dispatch to the pruner named by ``config.method``."""
    method = config.method
    if method == "docpruner":
        return docpruner_prune(doc, scores, config.k)
    if method == "attention_ratio":
        return attention_ratio_prune(doc, scores, config.ratio)
    if method == "attention_threshold":
        return attention_threshold_prune(doc, scores, config.fixed_threshold)
    if method == "random":
        return random_prune(doc, config.ratio, config.seed)
    if method == "attn_plus_sim":
        return attn_plus_sim_prune(doc, scores, config.k, config.alpha)
    if method == "pivot_threshold":
        return pivot_threshold_prune(doc, scores, config.k, config.k_dup, config.num_pivots)
    raise UnsupportedMethod(f"unknown pruning method {method!r}")
