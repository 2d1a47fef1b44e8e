"""Retrieval-quality and storage accounting: nDCG@k, run evaluation,
hyperparameter sweeps, and report serialization.

A run reduces every document with one pruning/merging config (wall-clock
timed as the offline phase), scores all queries against the reduced
corpus, and reports per-query nDCG together with pruning-ratio, storage,
and attention-entropy accounting.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .container import DocumentRecord, Qrels, QueryRecord
from .errors import EmptyGrid, ShapeError
from .importance import importance_of
from .mergers import MergeConfig, merge
from .pruners import PruneConfig, prune
from .retrieval import RankedList, rank_corpus

BYTES_PER_VALUE = 4  # stored precision is binary32

RunConfig = PruneConfig | MergeConfig


@dataclass
class EvalReport:
    """Everything one evaluation run produces, ready to serialize."""

    method: str
    config: dict
    per_query: dict[str, float]
    flagged_queries: list[str]  # queries with zero relevant documents
    aggregate_ndcg: float
    per_doc_ratio: dict[str, float]
    per_doc_entropy: dict[str, float]
    mean_pruning_ratio: float
    storage_bytes_before: int
    storage_bytes_after: int
    storage_delta_pct: float
    offline_seconds: float


def dcg(gains: Sequence[float]) -> float:
    return sum(gain / math.log2(position + 2) for position, gain in enumerate(gains))


def ndcg_at_k(ranking: RankedList, qrels: Qrels, cutoff: int) -> float:
    """nDCG with linear gain rel/log2(rank+1); unjudged documents count 0.

    Queries with no relevant documents score 0 (callers flag them).
    """
    grades = qrels.for_query(ranking.query_id)
    ideal = sorted((g for g in grades.values() if g > 0), reverse=True)[:cutoff]
    idcg = dcg(ideal)
    if idcg == 0.0:
        return 0.0
    gains = [grades.get(doc_id, 0) for doc_id in ranking.doc_ids()[:cutoff]]
    return dcg(gains) / idcg


def storage_bytes(vector_count: int, dim: int) -> int:
    """Bytes needed to store ``vector_count`` binary32 vectors of width ``dim``."""
    return vector_count * dim * BYTES_PER_VALUE


def reduce_document(doc: DocumentRecord, config: RunConfig) -> np.ndarray:
    """The vectors that survive ``config`` for one document."""
    if isinstance(config, MergeConfig):
        return merge(doc, config).merged_embeddings
    if config.method == "none":
        return doc.embeddings
    return prune(doc, importance_of(doc), config).kept_embeddings


def _check_dims(corpus: Sequence[DocumentRecord], queries: Sequence[QueryRecord]) -> None:
    dims = {doc.dim for doc in corpus} | {query.dim for query in queries}
    if len(dims) > 1:
        raise ShapeError(f"inconsistent embedding dimensions across inputs: {sorted(dims)}")


def evaluate_run(
    corpus: Sequence[DocumentRecord],
    queries: Sequence[QueryRecord],
    qrels: Qrels,
    config: RunConfig,
    cutoff: int = 5,
    threads: int = 1,
) -> EvalReport:
    """Reduce the corpus per ``config``, score all queries, aggregate."""
    _check_dims(corpus, queries)

    start = time.perf_counter()
    reduced = {doc.doc_id: reduce_document(doc, config) for doc in corpus}
    offline_seconds = time.perf_counter() - start

    per_doc_ratio = {
        doc.doc_id: 1.0 - reduced[doc.doc_id].shape[0] / doc.num_patches
        for doc in corpus
    }
    per_doc_entropy = {doc.doc_id: importance_of(doc).entropy for doc in corpus}

    kept_total = sum(vectors.shape[0] for vectors in reduced.values())
    original_total = sum(doc.num_patches for doc in corpus)
    dim = corpus[0].dim if corpus else 0
    before = storage_bytes(original_total, dim)
    after = storage_bytes(kept_total, dim)

    def score_query(query: QueryRecord) -> float:
        return ndcg_at_k(rank_corpus(query, reduced), qrels, cutoff)

    if threads == 1 or len(queries) < 2:
        ndcgs = [score_query(query) for query in queries]
    else:
        workers = threads if threads > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ndcgs = list(pool.map(score_query, queries))

    per_query = {query.query_id: value for query, value in zip(queries, ndcgs)}
    flagged = [q.query_id for q in queries if not qrels.has_relevant(q.query_id)]

    return EvalReport(
        method=config.method,
        config=asdict(config),
        per_query=per_query,
        flagged_queries=flagged,
        aggregate_ndcg=float(np.mean(ndcgs)) if ndcgs else 0.0,
        per_doc_ratio=per_doc_ratio,
        per_doc_entropy=per_doc_entropy,
        mean_pruning_ratio=1.0 - kept_total / original_total if original_total else 0.0,
        storage_bytes_before=before,
        storage_bytes_after=after,
        storage_delta_pct=100.0 * (before - after) / before if before else 0.0,
        offline_seconds=offline_seconds,
    )


def sweep(
    corpus: Sequence[DocumentRecord],
    queries: Sequence[QueryRecord],
    qrels: Qrels,
    configs: Sequence[RunConfig],
    cutoff: int = 5,
    threads: int = 1,
) -> list[EvalReport]:
    """One report per config, order-preserving; the (ratio, nDCG) frontier."""
    if not configs:
        raise EmptyGrid("sweep requires at least one configuration")
    return [
        evaluate_run(corpus, queries, qrels, config, cutoff=cutoff, threads=threads)
        for config in configs
    ]


def _json_safe(value: float) -> float | None:
    return value if math.isfinite(value) else None


def report_to_dict(report: EvalReport) -> dict:
    """Stable-keyed dict matching the published JSON report schema."""
    return {
        "method": report.method,
        "config": report.config,
        "aggregate_ndcg": report.aggregate_ndcg,
        "mean_pruning_ratio": report.mean_pruning_ratio,
        "storage_bytes_before": report.storage_bytes_before,
        "storage_bytes_after": report.storage_bytes_after,
        "storage_delta_pct": report.storage_delta_pct,
        "offline_seconds": report.offline_seconds,
        "flagged_queries": report.flagged_queries,
        "per_query": report.per_query,
        "per_doc": {
            "ratio": report.per_doc_ratio,
            "entropy": {
                doc_id: _json_safe(value)
                for doc_id, value in report.per_doc_entropy.items()
            },
        },
    }


def write_report_json(path, reports: EvalReport | Sequence[EvalReport]) -> None:
    if isinstance(reports, EvalReport):
        payload = report_to_dict(reports)
    else:
        payload = [report_to_dict(r) for r in reports]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")

_CSV_PARAM_FIELDS = ("k", "ratio", "fixed_threshold", "alpha", "k_dup", "num_pivots", "factor", "seed")


def write_report_csv(path, reports: EvalReport | Sequence[EvalReport]) -> None:
    """One row per query; method and its hyperparameters echoed per row."""
    if isinstance(reports, EvalReport):
        reports = [reports]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["query_id", "ndcg", "method", *_CSV_PARAM_FIELDS])
        for report in reports:
            params = [report.config.get(name, "") for name in _CSV_PARAM_FIELDS]
            for query_id, value in report.per_query.items():
                writer.writerow([query_id, value, report.method, *params])
