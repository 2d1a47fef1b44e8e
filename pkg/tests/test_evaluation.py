import json
import math

import numpy as np
import pytest

from mvdr.container import DocumentRecord, Qrels, QueryRecord
from mvdr.errors import EmptyGrid, ShapeError
from mvdr.evaluation import (
    evaluate_run,
    ndcg_at_k,
    report_to_dict,
    storage_bytes,
    sweep,
    write_report_csv,
    write_report_json,
)
from mvdr.mergers import MergeConfig
from mvdr.pruners import DEFAULT_K_GRID, PruneConfig
from mvdr.retrieval import RankedList, rank_corpus
from mvdr.synthetic import planted_corpus

from conftest import doc_from_importance, f32


def ranking(doc_ids, query_id="q"):
    entries = tuple((doc_id, float(-i)) for i, doc_id in enumerate(doc_ids))
    return RankedList(query_id=query_id, entries=entries)


def qrels_for(grades: dict[str, int], query_id="q") -> Qrels:
    return Qrels(grades={(query_id, doc_id): g for doc_id, g in grades.items()})


class TestNdcg:
    def test_perfect_single_relevant(self):
        assert ndcg_at_k(ranking(["d1"]), qrels_for({"d1": 1}), 5) == 1.0

    def test_gap_in_ranking(self):
        value = ndcg_at_k(ranking(["d1", "d2", "d3"]), qrels_for({"d1": 1, "d3": 1}), 5)
        assert value == pytest.approx(0.9197207891481876, abs=1e-9)

    def test_relevant_at_rank_two(self):
        value = ndcg_at_k(ranking(["d2", "d1"]), qrels_for({"d1": 1}), 5)
        assert value == pytest.approx(0.6309297535714575, abs=1e-9)

    def test_graded_perfect(self):
        assert ndcg_at_k(ranking(["d1", "d2"]), qrels_for({"d1": 3, "d2": 1}), 5) == 1.0

    def test_graded_swapped(self):
        value = ndcg_at_k(ranking(["d2", "d1"]), qrels_for({"d1": 3, "d2": 1}), 5)
        assert value == pytest.approx(0.7967075809905066, abs=1e-9)

    def test_no_relevant_documents(self):
        assert ndcg_at_k(ranking(["d1", "d2"]), qrels_for({}), 5) == 0.0
        assert ndcg_at_k(ranking(["d1"]), qrels_for({"d1": 0}), 5) == 0.0

    def test_relevant_below_cutoff(self):
        value = ndcg_at_k(
            ranking(["n1", "n2", "n3", "n4", "n5", "d1"]), qrels_for({"d1": 1}), 5
        )
        assert value == 0.0

    def test_all_relevant_any_order_is_perfect(self):
        value = ndcg_at_k(
            ranking(["d2", "d3", "d1"]), qrels_for({"d1": 1, "d2": 1, "d3": 1}), 5
        )
        assert value == 1.0

    def test_reorder_below_cutoff_among_irrelevant(self):
        grades = qrels_for({"d1": 2, "d2": 1})
        a = ndcg_at_k(ranking(["d1", "d2", "x", "y", "z"]), grades, 5)
        b = ndcg_at_k(ranking(["d1", "d2", "z", "x", "y"]), grades, 5)
        assert a == b == 1.0

    def test_cutoff_truncates_ideal_too(self):
        grades = qrels_for({f"d{i}": 1 for i in range(1, 8)})
        value = ndcg_at_k(ranking([f"d{i}" for i in range(1, 6)]), grades, 5)
        assert value == 1.0


class TestStorage:
    def test_simple(self):
        assert storage_bytes(100, 128) == 51200

    def test_zero(self):
        assert storage_bytes(0, 64) == 0

    def test_summed_over_docs(self):
        assert sum(storage_bytes(n, 4) for n in (2, 3, 5)) == 160


def small_benchmark(seed=13):
    return planted_corpus(num_docs=24, dim=8, patches_min=10, patches_max=20, seed=seed)


class TestEvaluateRun:
    def test_identity_config_reproduces_base_run(self):
        docs, queries, qrels = small_benchmark()
        identity = evaluate_run(docs, queries, qrels, PruneConfig(method="random", ratio=0.0))
        base = evaluate_run(docs, queries, qrels, PruneConfig(method="none"))
        assert identity.per_query == base.per_query
        assert identity.mean_pruning_ratio == 0.0
        assert identity.storage_bytes_after == identity.storage_bytes_before
        # identical reduced matrices imply identical RankedLists
        reduced = {doc.doc_id: doc.embeddings for doc in docs}
        for query in queries[:3]:
            assert rank_corpus(query, reduced).entries == rank_corpus(query, reduced).entries

    def test_peaky_docs_pruned_harder_than_uniform(self):
        one_hot = np.zeros(20)
        one_hot[7] = 1.0
        docs = [
            doc_from_importance(one_hot, doc_id="peaky", seed=1),
            doc_from_importance(np.full(20, 0.5) + np.linspace(0, 0.01, 20), doc_id="flat", seed=2),
        ]
        queries = [QueryRecord(query_id="q", embeddings=np.ones((1, 4)))]
        report = evaluate_run(docs, queries, Qrels(grades={("q", "peaky"): 1}),
                              PruneConfig(method="docpruner", k=0.0))
        assert report.per_doc_ratio["peaky"] > report.per_doc_ratio["flat"]

    def test_mean_ratio_matches_storage_delta(self):
        docs, queries, qrels = small_benchmark()
        report = evaluate_run(docs, queries, qrels, PruneConfig(method="docpruner", k=0.0))
        from_storage = 1.0 - report.storage_bytes_after / report.storage_bytes_before
        assert abs(report.mean_pruning_ratio - from_storage) < 1e-12

    def test_flagged_queries(self):
        docs, queries, qrels = small_benchmark()
        qrels.grades.pop((queries[0].query_id, docs[0].doc_id))
        report = evaluate_run(docs, queries, qrels, PruneConfig(method="none"))
        assert report.flagged_queries == [queries[0].query_id]
        assert report.per_query[queries[0].query_id] == 0.0

    def test_threads_do_not_change_results(self):
        docs, queries, qrels = small_benchmark()
        config = PruneConfig(method="docpruner", k=0.0)
        single = evaluate_run(docs, queries, qrels, config, threads=1)
        multi = evaluate_run(docs, queries, qrels, config, threads=4)
        assert single.per_query == multi.per_query

    def test_merge_config_accepted(self):
        docs, queries, qrels = small_benchmark()
        report = evaluate_run(docs, queries, qrels, MergeConfig(method="pool1d", factor=2))
        assert 0.0 < report.mean_pruning_ratio < 1.0
        assert report.method == "pool1d"

    def test_dimension_mismatch_rejected(self):
        docs, queries, qrels = small_benchmark()
        bad_query = QueryRecord(query_id="qx", embeddings=np.ones((2, 3)))
        with pytest.raises(ShapeError):
            evaluate_run(docs, [bad_query], qrels, PruneConfig(method="none"))


class TestSweep:
    def test_singleton_matches_evaluate_run(self):
        docs, queries, qrels = small_benchmark()
        config = PruneConfig(method="docpruner", k=0.0)
        (swept,) = sweep(docs, queries, qrels, [config])
        single = evaluate_run(docs, queries, qrels, config)
        assert swept.per_query == single.per_query
        assert swept.mean_pruning_ratio == single.mean_pruning_ratio

    def test_ratio_weakly_increasing_in_k(self):
        docs, queries, qrels = small_benchmark()
        configs = [PruneConfig(method="docpruner", k=k) for k in DEFAULT_K_GRID]
        reports = sweep(docs, queries, qrels, configs)
        ratios = [r.mean_pruning_ratio for r in reports]
        assert all(a <= b + 1e-12 for a, b in zip(ratios, ratios[1:]))

    def test_empty_grid(self):
        docs, queries, qrels = small_benchmark()
        with pytest.raises(EmptyGrid):
            sweep(docs, queries, qrels, [])


class TestReports:
    def test_json_schema_keys(self, tmp_path):
        docs, queries, qrels = small_benchmark()
        report = evaluate_run(docs, queries, qrels, PruneConfig(method="docpruner"))
        payload = report_to_dict(report)
        for key in (
            "method",
            "config",
            "aggregate_ndcg",
            "mean_pruning_ratio",
            "storage_bytes_before",
            "storage_bytes_after",
            "offline_seconds",
            "per_query",
            "per_doc",
        ):
            assert key in payload
        assert set(payload["per_doc"]) == {"ratio", "entropy"}
        path = tmp_path / "report.json"
        write_report_json(path, report)
        parsed = json.loads(path.read_text())
        assert parsed["method"] == "docpruner"
        assert len(parsed["per_query"]) == len(queries)

    def test_zero_mass_entropy_serializes_as_null(self, tmp_path):
        doc = DocumentRecord(
            doc_id="d", embeddings=f32([[1.0, 0.0]]), importance=f32([0.0])
        )
        queries = [QueryRecord(query_id="q", embeddings=f32([[1.0, 0.0]]))]
        report = evaluate_run([doc], queries, qrels_for({"d": 1}), PruneConfig(method="none"))
        assert math.isnan(report.per_doc_entropy["d"])
        path = tmp_path / "nan.json"
        write_report_json(path, report)
        assert json.loads(path.read_text())["per_doc"]["entropy"]["d"] is None

    def test_csv_one_row_per_query(self, tmp_path):
        docs, queries, qrels = small_benchmark()
        report = evaluate_run(docs, queries, qrels, PruneConfig(method="docpruner"))
        path = tmp_path / "report.csv"
        write_report_csv(path, report)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1 + len(queries)
        assert lines[0].startswith("query_id,ndcg,method")
