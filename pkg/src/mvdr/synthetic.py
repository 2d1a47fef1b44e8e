"""Synthetic corpora with known retrieval structure.

Two constructions:

* planted-retrieval: each query's token vectors are embedded verbatim as
  high-importance patches of exactly one document, everything else is
  low-norm noise, so the unpruned ranking is known (nDCG@5 = 1) and
  adaptive pruning at k=0 lands near 50% removal.
* entropy-mix: half the documents get one-hot importance (sparse pages),
  half get near-uniform importance (dense pages), exposing the adaptive
  pruning-ratio gap between the two regimes.

All values are rounded through binary32 so files round-trip bit-exactly.
"""

from __future__ import annotations

import numpy as np

from .container import DocumentRecord, Qrels, QueryRecord


def _f32(array: np.ndarray) -> np.ndarray:
    return array.astype(np.float32).astype(np.float64)


def _unit_rows(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    rows = rng.standard_normal((count, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def planted_corpus(
    num_docs: int = 200,
    dim: int = 16,
    patches_min: int = 20,
    patches_max: int = 60,
    tokens_per_query: int = 4,
    noise_scale: float = 0.25,
    seed: int = 0,
) -> tuple[list[DocumentRecord], list[QueryRecord], Qrels]:
    """Corpus where query i's tokens are planted into document i.

    Planted patches carry importance well above the noise band
    (1.2-1.6 vs 0.05-0.95), so a mean threshold keeps all of them while
    dropping roughly half of the noise patches.
    """
    rng = np.random.default_rng(seed)
    docs = []
    queries = []
    grades = {}
    for index in range(num_docs):
        doc_id = f"doc{index:04d}"
        query_id = f"q{index:04d}"
        num_patches = int(rng.integers(patches_min, patches_max + 1))

        tokens = _unit_rows(rng, tokens_per_query, dim)
        noise = noise_scale * _unit_rows(rng, num_patches - tokens_per_query, dim)
        embeddings = np.concatenate([tokens, noise])
        importance = np.concatenate(
            [
                rng.uniform(1.2, 1.6, size=tokens_per_query),
                rng.uniform(0.05, 0.95, size=num_patches - tokens_per_query),
            ]
        )
        # shuffle so planted patches are not positionally special
        order = rng.permutation(num_patches)
        docs.append(
            DocumentRecord(
                doc_id=doc_id,
                embeddings=_f32(embeddings[order]),
                importance=_f32(importance[order]),
            )
        )
        queries.append(QueryRecord(query_id=query_id, embeddings=_f32(tokens)))
        grades[(query_id, doc_id)] = 1
    return docs, queries, Qrels(grades=grades)


def entropy_mix_corpus(
    num_per_group: int = 100,
    dim: int = 8,
    patches_min: int = 20,
    patches_max: int = 60,
    seed: int = 0,
) -> tuple[list[DocumentRecord], list[DocumentRecord]]:
    """(one-hot docs, uniform-plus-jitter docs) with random embeddings."""
    rng = np.random.default_rng(seed)

    def make(doc_id: str, importance: np.ndarray) -> DocumentRecord:
        embeddings = rng.standard_normal((importance.shape[0], dim))
        return DocumentRecord(
            doc_id=doc_id, embeddings=_f32(embeddings), importance=_f32(importance)
        )

    one_hot = []
    uniform = []
    for index in range(num_per_group):
        num_patches = int(rng.integers(patches_min, patches_max + 1))
        peaked = np.zeros(num_patches)
        peaked[rng.integers(num_patches)] = 1.0
        one_hot.append(make(f"onehot{index:03d}", peaked))

        num_patches = int(rng.integers(patches_min, patches_max + 1))
        flat = 1.0 + rng.uniform(-0.05, 0.05, size=num_patches)
        uniform.append(make(f"uniform{index:03d}", flat))
    return one_hot, uniform


def random_corpus(
    num_docs: int,
    dim: int,
    patches_min: int,
    patches_max: int,
    seed: int = 0,
    with_attention: bool = False,
    with_global: bool = False,
    with_grid: bool = False,
    heads: int = 4,
) -> list[DocumentRecord]:
    """Unstructured random documents, mainly for fuzzing and demos."""
    rng = np.random.default_rng(seed)
    docs = []
    for index in range(num_docs):
        if with_grid:
            rows = int(rng.integers(1, 9))
            cols = int(rng.integers(1, 9))
            num_patches = rows * cols
        else:
            rows = cols = None
            num_patches = int(rng.integers(patches_min, patches_max + 1))
        attention = (
            _f32(rng.uniform(0.0, 1.0, size=(heads, num_patches)))
            if with_attention
            else None
        )
        docs.append(
            DocumentRecord(
                doc_id=f"doc{index:04d}",
                embeddings=_f32(rng.standard_normal((num_patches, dim))),
                grid_rows=rows,
                grid_cols=cols,
                importance=None if with_attention else _f32(rng.uniform(0.0, 1.0, size=num_patches)),
                head_attention=attention,
                global_embedding=_f32(rng.standard_normal(dim)) if with_global else None,
            )
        )
    return docs
