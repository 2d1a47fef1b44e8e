import json
import subprocess
import sys

import pytest

from mvdr import container
from mvdr.cli import run
from mvdr.synthetic import planted_corpus


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("bench")
    docs, queries, qrels = planted_corpus(num_docs=16, dim=8, patches_min=8, patches_max=16, seed=2)
    container.write_corpus(directory / "corpus.mvdr", docs)
    container.write_queries(directory / "queries.mvdq", queries)
    container.write_qrels(directory / "qrels.txt", qrels)
    return directory


def eval_args(fixture_dir, *extra):
    return [
        "evaluate",
        "--corpus", str(fixture_dir / "corpus.mvdr"),
        "--queries", str(fixture_dir / "queries.mvdq"),
        "--qrels", str(fixture_dir / "qrels.txt"),
        *extra,
    ]


class TestEvaluate:
    def test_writes_json_report(self, fixture_dir, tmp_path):
        out = tmp_path / "report.json"
        code = run(eval_args(fixture_dir, "--method", "docpruner", "--k", "-0.25", "--out", str(out)))
        assert code == 0
        report = json.loads(out.read_text())
        assert report["method"] == "docpruner"
        assert report["config"]["k"] == -0.25
        assert 0.0 <= report["aggregate_ndcg"] <= 1.0

    def test_csv_format(self, fixture_dir, tmp_path):
        out = tmp_path / "report.csv"
        code = run(eval_args(fixture_dir, "--format", "csv", "--out", str(out)))
        assert code == 0
        assert out.read_text().startswith("query_id,ndcg,method")

    def test_merge_method(self, fixture_dir, tmp_path):
        out = tmp_path / "report.json"
        code = run(eval_args(fixture_dir, "--method", "pool1d", "--factor", "2", "--out", str(out)))
        assert code == 0
        assert json.loads(out.read_text())["method"] == "pool1d"

    def test_missing_corpus_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            run(["evaluate", "--queries", "q", "--qrels", "r"])
        assert excinfo.value.code == 1

    def test_bad_magic_is_data_error(self, fixture_dir, tmp_path):
        bad = tmp_path / "bad.mvdr"
        bad.write_bytes(b"JUNKJUNKJUNK")
        code = run([
            "evaluate",
            "--corpus", str(bad),
            "--queries", str(fixture_dir / "queries.mvdq"),
            "--qrels", str(fixture_dir / "qrels.txt"),
        ])
        assert code == 2

    def test_reports_byte_identical_modulo_offline_seconds(self, fixture_dir, tmp_path):
        out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out_a, out_b):
            assert run(eval_args(fixture_dir, "--seed", "9", "--out", str(out))) == 0
        parsed_a, parsed_b = json.loads(out_a.read_text()), json.loads(out_b.read_text())
        parsed_a.pop("offline_seconds"), parsed_b.pop("offline_seconds")
        assert json.dumps(parsed_a, sort_keys=False) == json.dumps(parsed_b, sort_keys=False)

    def test_figures_rendered(self, fixture_dir, tmp_path):
        figures = tmp_path / "figs"
        code = run(eval_args(fixture_dir, "--out", str(tmp_path / "r.json"), "--figures", str(figures)))
        assert code == 0
        assert (figures / "run_diagnostics.png").exists()


class TestSweep:
    def test_default_grid(self, fixture_dir, tmp_path):
        out = tmp_path / "sweep.json"
        code = run([
            "sweep",
            "--corpus", str(fixture_dir / "corpus.mvdr"),
            "--queries", str(fixture_dir / "queries.mvdq"),
            "--qrels", str(fixture_dir / "qrels.txt"),
            "--method", "docpruner",
            "--out", str(out),
        ])
        assert code == 0
        reports = json.loads(out.read_text())
        assert [r["config"]["k"] for r in reports] == [-0.5, -0.25, 0.0, 0.25, 0.5, 1.0]

    def test_custom_grid_and_figures(self, fixture_dir, tmp_path):
        out = tmp_path / "sweep.json"
        figures = tmp_path / "figs"
        code = run([
            "sweep",
            "--corpus", str(fixture_dir / "corpus.mvdr"),
            "--queries", str(fixture_dir / "queries.mvdq"),
            "--qrels", str(fixture_dir / "qrels.txt"),
            "--method", "random", "--grid", "0.2,0.8",
            "--out", str(out), "--figures", str(figures),
        ])
        assert code == 0
        reports = json.loads(out.read_text())
        assert [r["config"]["ratio"] for r in reports] == [0.2, 0.8]
        assert (figures / "frontier.png").exists()
        assert (figures / "ratio_distribution.png").exists()


class TestOtherCommands:
    def test_stats(self, fixture_dir, tmp_path):
        out = tmp_path / "stats.json"
        code = run(["stats", "--corpus", str(fixture_dir / "corpus.mvdr"), "--out", str(out)])
        assert code == 0
        stats = json.loads(out.read_text())
        assert stats["num_docs"] == 16
        assert len(stats["per_doc"]) == 16

    def test_inspect_listing_and_record(self, fixture_dir, tmp_path, capsys):
        assert run(["inspect", "--corpus", str(fixture_dir / "corpus.mvdr")]) == 0
        listing = json.loads(capsys.readouterr().out)
        assert listing["num_docs"] == 16
        doc_id = listing["doc_ids"][0]
        assert run(["inspect", "--corpus", str(fixture_dir / "corpus.mvdr"), "--doc-id", doc_id]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["doc_id"] == doc_id
        assert len(record["derived_importance"]) == record["num_patches"]

    def test_inspect_unknown_doc(self, fixture_dir):
        assert run(["inspect", "--corpus", str(fixture_dir / "corpus.mvdr"), "--doc-id", "nope"]) == 2

    def test_validate(self, fixture_dir, capsys):
        code = run([
            "validate",
            "--corpus", str(fixture_dir / "corpus.mvdr"),
            "--queries", str(fixture_dir / "queries.mvdq"),
        ])
        assert code == 0
        output = capsys.readouterr().out
        assert "OK corpus: 16 documents" in output
        assert "OK queries: 16 queries" in output

    def test_validate_requires_a_file(self):
        with pytest.raises(SystemExit) as excinfo:
            run(["validate"])
        assert excinfo.value.code == 1

    def test_synth_round_trip(self, tmp_path):
        out_dir = tmp_path / "synth"
        assert run(["synth", "--out-dir", str(out_dir), "--docs", "6", "--dim", "4"]) == 0
        docs = container.read_corpus(out_dir / "corpus.mvdr")
        queries = container.read_queries(out_dir / "queries.mvdq")
        qrels = container.read_qrels(out_dir / "qrels.txt")
        assert len(docs) == len(queries) == len(qrels.grades) == 6


class TestEntryPoint:
    def test_module_invocation(self, fixture_dir, tmp_path):
        out = tmp_path / "report.json"
        result = subprocess.run(
            [sys.executable, "-m", "mvdr", *eval_args(fixture_dir, "--out", str(out))],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert json.loads(out.read_text())["method"] == "docpruner"
