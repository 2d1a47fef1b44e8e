"""Per-patch importance scores and their attention-distribution diagnostics.

A document's importance vector is either taken verbatim from the record
(the exporter already averaged attention heads) or derived here by
averaging the stored per-head global-token attention.  The Shannon
entropy of the normalized scores is the dense-vs-sparse diagnostic that
explains why adaptive thresholds prune sparse pages harder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .container import DocumentRecord
from .errors import (
    DegenerateAttention,
    InvariantViolation,
    MissingImportanceSource,
    ShapeError,
)
from .numerics import mean, shannon_entropy, std_pop


@dataclass(frozen=True)
class ImportanceScores:
    """Importance vector plus the statistics every pruner consumes.

    ``entropy`` is in nats and is NaN when the scores carry no mass at
    all (normalization undefined).
    """

    scores: np.ndarray  # (L_d,), non-negative
    mu: float
    sigma: float
    entropy: float

    def __len__(self) -> int:
        return self.scores.shape[0]


def average_heads(head_attention) -> np.ndarray:
    """Column-wise mean over attention heads: out[j] = mean_h A[h, j]."""
    att = np.asarray(head_attention, dtype=np.float64)
    if att.ndim != 2 or att.shape[0] < 1 or att.shape[1] < 1:
        raise ShapeError(f"head attention must be a non-empty H x L matrix, got {att.shape}")
    if not np.all(np.isfinite(att)):
        raise InvariantViolation("non-finite attention values", field="head_attention")
    if np.any(att < 0.0):
        raise InvariantViolation("negative attention values", field="head_attention")
    return att.mean(axis=0)


def from_scores(scores) -> ImportanceScores:
    """Attach mean/std/entropy statistics to a raw importance vector."""
    arr = np.asarray(scores, dtype=np.float64)
    total = float(arr.sum())
    if total > 0.0:
        entropy = shannon_entropy(arr / total)
    else:
        entropy = math.nan
    return ImportanceScores(scores=arr, mu=mean(arr), sigma=std_pop(arr), entropy=entropy)


def importance_of(doc: DocumentRecord) -> ImportanceScores:
    """Importance scores for a document.

    Precomputed importance wins over per-head attention: the exporter is
    the authority on which global token and layer produced it.
    """
    if doc.importance is not None:
        scores = doc.importance
    elif doc.head_attention is not None:
        scores = average_heads(doc.head_attention)
    else:
        raise MissingImportanceSource(
            f"document {doc.doc_id!r} has neither importance nor head_attention"
        )
    return from_scores(scores)


def attention_distribution(scores: ImportanceScores) -> np.ndarray:
    """Normalize scores into the probability distribution p(j) = I_j / sum(I)."""
    total = float(scores.scores.sum())
    if total <= 0.0:
        raise DegenerateAttention("all-zero importance cannot be normalized")
    return scores.scores / total
