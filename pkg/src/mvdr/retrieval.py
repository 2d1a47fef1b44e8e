"""Late-interaction MaxSim scoring and corpus ranking.

The relevance of a document is the sum, over query tokens, of each
token's maximum dot product against the document's (possibly pruned or
merged) vectors.  Raw dot products, no renormalization: the encoders
this engine serves emit normalized embeddings and the engine does not
second-guess them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .container import QueryRecord
from .errors import EmptyCorpus, EmptyDocument, ShapeError


@dataclass(frozen=True)
class RankedList:
    """Documents ordered by descending score, ties by ascending doc_id."""

    query_id: str
    entries: tuple[tuple[str, float], ...]

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]


def maxsim_score(query: QueryRecord, doc_vectors: np.ndarray) -> float:
    """Sum over query tokens of the max dot product against doc vectors."""
    doc_vectors = np.asarray(doc_vectors, dtype=np.float64)
    if doc_vectors.ndim != 2 or doc_vectors.shape[0] == 0:
        raise EmptyDocument("document has no vectors to score against")
    if doc_vectors.shape[1] != query.dim:
        raise ShapeError(
            f"query dim {query.dim} vs document dim {doc_vectors.shape[1]}"
        )
    # einsum (not BLAS matmul): each token/vector dot product must round
    # identically whatever the matrix shapes, or pruning a document could
    # raise its score by an ulp and break the subset-score bound
    similarities = np.einsum("ip,jp->ij", query.embeddings, doc_vectors)
    return float(similarities.max(axis=1).sum())


def rank_corpus(query: QueryRecord, corpus_vectors: Mapping[str, np.ndarray]) -> RankedList:
    """Score the query against every document and sort deterministically."""
    if not corpus_vectors:
        raise EmptyCorpus("cannot rank an empty corpus")
    scored = [
        (doc_id, maxsim_score(query, vectors))
        for doc_id, vectors in corpus_vectors.items()
    ]
    scored.sort(key=lambda entry: (-entry[1], entry[0]))
    return RankedList(query_id=query.query_id, entries=tuple(scored))


def retrieve_topk(
    query: QueryRecord, corpus_vectors: Mapping[str, np.ndarray], cutoff: int
) -> RankedList:
    """Length-min(cutoff, corpus size) prefix of the full ranking."""
    ranking = rank_corpus(query, corpus_vectors)
    return RankedList(query_id=ranking.query_id, entries=ranking.entries[:cutoff])
