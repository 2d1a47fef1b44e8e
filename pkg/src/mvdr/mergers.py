"""Merging strategies: semantic clustering and 1-D/2-D average pooling.

Merging replaces groups of patch embeddings by a single aggregate
vector instead of discarding them.  Semantic clustering runs Ward-linkage
agglomerative clustering over cosine distances; the pooling variants
group patches by stored order (1-D) or by their spatial grid (2-D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .container import DocumentRecord
from .errors import BadFactor, DegenerateVector, MissingGrid, UnsupportedMethod

MERGE_METHODS = ("sem_cluster", "pool1d", "pool2d")

DEFAULT_FACTOR_GRID = (2, 4, 9, 16, 25)
DEFAULT_FACTOR_GRID_2D = (4, 9, 16, 25)


@dataclass(frozen=True)
class MergeConfig:
    method: str
    factor: int = 2


@dataclass(frozen=True)
class MergedDocument:
    """Merged representation of one document."""

    doc_id: str
    merged_embeddings: np.ndarray  # (M, P)
    source_groups: tuple[tuple[int, ...], ...]  # original indices per merged vector
    compression_ratio: float


def _build(doc: DocumentRecord, merged: np.ndarray, groups) -> MergedDocument:
    groups = tuple(tuple(int(i) for i in g) for g in groups)
    return MergedDocument(
        doc_id=doc.doc_id,
        merged_embeddings=merged,
        source_groups=groups,
        compression_ratio=1.0 - merged.shape[0] / doc.num_patches,
    )


def _ward_partition(distances: np.ndarray, target: int) -> list[list[int]]:
    """Agglomerate down to ``target`` clusters with Ward linkage.

    The Lance-Williams recurrence is applied directly to the given
    dissimilarity matrix.  Ties are broken by merging the candidate pair
    with the lexicographically smallest (i, j), which a row-major argmin
    over the masked upper triangle delivers for free.
    """
    num = distances.shape[0]
    inf = np.inf
    # `full` keeps both triangles for vectorized row access; `upper`
    # holds only live i < j entries and drives the min search
    full = distances.astype(np.float64).copy()
    np.fill_diagonal(full, 0.0)
    upper = full.copy()
    upper[np.tril_indices(num)] = inf

    sizes = np.ones(num, dtype=np.int64)
    alive = np.ones(num, dtype=bool)
    members: list[list[int] | None] = [[i] for i in range(num)]
    active = num

    while active > target:
        flat = int(np.argmin(upper))
        i, j = divmod(flat, num)
        d_ij = upper[i, j]
        n_i, n_j = int(sizes[i]), int(sizes[j])

        alive[j] = False
        others = np.flatnonzero(alive)
        others = others[others != i]

        # Lance-Williams update for every other live cluster k:
        # d(ij,k)^2 = [(n_i+n_k) d_ik^2 + (n_j+n_k) d_jk^2 - n_k d_ij^2] / (n_i+n_j+n_k)
        if others.size:
            n_k = sizes[others].astype(np.float64)
            d_ik = full[i, others]
            d_jk = full[j, others]
            merged_sq = (
                (n_i + n_k) * d_ik * d_ik
                + (n_j + n_k) * d_jk * d_jk
                - n_k * d_ij * d_ij
            ) / (n_i + n_j + n_k)
            new = np.sqrt(np.maximum(merged_sq, 0.0))
            full[i, others] = new
            full[others, i] = new
            below = others < i
            upper[others[below], i] = new[below]
            upper[i, others[~below]] = new[~below]

        upper[j, :] = inf
        upper[:, j] = inf
        members[i] = members[i] + members[j]  # type: ignore[operator]
        members[j] = None
        sizes[i] = n_i + n_j
        active -= 1

    clusters = [sorted(m) for m in members if m is not None]
    clusters.sort(key=lambda group: group[0])
    return clusters


def sem_cluster_merge(doc: DocumentRecord, merging_factor: int) -> MergedDocument:
    """Ward-linkage clustering over cosine distances; each cluster is
    replaced by the mean of its original (pre-normalization) embeddings.

    Target cluster count is max(1, floor(L_d / merging_factor)).
    """
    if merging_factor < 1:
        raise BadFactor(f"merging factor must be >= 1, got {merging_factor}")
    emb = doc.embeddings
    norms = np.linalg.norm(emb, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateVector(f"document {doc.doc_id!r} has a zero-norm patch")
    unit = emb / norms[:, None]
    distances = 1.0 - unit @ unit.T
    np.fill_diagonal(distances, 0.0)

    target = max(1, doc.num_patches // merging_factor)
    groups = _ward_partition(distances, target)
    merged = np.stack([emb[group].mean(axis=0) for group in groups])
    return _build(doc, merged, groups)


def pool1d_merge(doc: DocumentRecord, merging_factor: int) -> MergedDocument:
    """Average pooling over consecutive windows in stored order.

    The final partial window is zero-padded and the divisor stays the
    window size, so padded windows are scaled by real_count/factor.
    """
    if merging_factor < 1:
        raise BadFactor(f"merging factor must be >= 1, got {merging_factor}")
    emb = doc.embeddings
    num = doc.num_patches
    window_count = math.ceil(num / merging_factor)
    merged = np.zeros((window_count, doc.dim), dtype=np.float64)
    groups = []
    for w in range(window_count):
        start = w * merging_factor
        stop = min(start + merging_factor, num)
        merged[w] = emb[start:stop].sum(axis=0) / merging_factor
        groups.append(range(start, stop))
    return _build(doc, merged, groups)


def pool2d_merge(doc: DocumentRecord, merging_factor: int) -> MergedDocument:
    """Average pooling over s x s grid windows (factor = s^2).

    Windows at the right/bottom edge cover fewer real cells; their mean
    is masked to the real cells, so padding never dilutes the average.
    """
    side = math.isqrt(merging_factor)
    if merging_factor < 1 or side * side != merging_factor:
        raise BadFactor(f"2-D pooling factor must be a perfect square, got {merging_factor}")
    if doc.grid_rows is None or doc.grid_cols is None:
        raise MissingGrid(f"document {doc.doc_id!r} lacks grid dimensions")
    rows, cols = doc.grid_rows, doc.grid_cols
    grid = doc.embeddings.reshape(rows, cols, doc.dim)

    merged_rows = []
    groups = []
    for wr in range(math.ceil(rows / side)):
        for wc in range(math.ceil(cols / side)):
            r0, r1 = wr * side, min((wr + 1) * side, rows)
            c0, c1 = wc * side, min((wc + 1) * side, cols)
            block = grid[r0:r1, c0:c1].reshape(-1, doc.dim)
            merged_rows.append(block.mean(axis=0))
            groups.append(
                [r * cols + c for r in range(r0, r1) for c in range(c0, c1)]
            )
    return _build(doc, np.stack(merged_rows), groups)


def merge(doc: DocumentRecord, config: MergeConfig) -> MergedDocument:
    """Dispatch to the merger named by ``config.method``."""
    if config.method == "sem_cluster":
        return sem_cluster_merge(doc, config.factor)
    if config.method == "pool1d":
        return pool1d_merge(doc, config.factor)
    if config.method == "pool2d":
        return pool2d_merge(doc, config.factor)
    raise UnsupportedMethod(f"unknown merging method {config.method!r}")
