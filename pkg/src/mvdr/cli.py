"""Command-line interface.

Subcommands:

* ``evaluate``  one method/config against a corpus, queries, and qrels
* ``sweep``     a hyperparameter grid for one method
* ``stats``     importance/entropy/ratio distributions, no queries needed
* ``inspect``   dump one document record (or the corpus id listing)
* ``validate``  structural check of container files
* ``synth``     generate synthetic corpora for experimentation

Exit status: 0 success, 1 usage error, 2 data/container error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import container, figures, synthetic
from .errors import MvdrError
from .evaluation import (
    EvalReport,
    evaluate_run,
    report_to_dict,
    storage_bytes,
    sweep,
    write_report_csv,
    write_report_json,
)
from .importance import importance_of
from .mergers import (
    DEFAULT_FACTOR_GRID,
    DEFAULT_FACTOR_GRID_2D,
    MERGE_METHODS,
    MergeConfig,
)
from .pruners import (
    DEFAULT_K_GRID,
    DEFAULT_RATIO_GRID,
    PruneConfig,
    prune,
)

METHOD_CHOICES = (
    "docpruner",
    "attention-ratio",
    "attention-threshold",
    "random",
    "attn-plus-sim",
    "pivot-threshold",
    "sem-cluster",
    "pool1d",
    "pool2d",
    "none",
)


class _Parser(argparse.ArgumentParser):
    # usage problems are exit status 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _canonical(method: str) -> str:
    return method.replace("-", "_")


def build_config(args) -> PruneConfig | MergeConfig:
    method = _canonical(args.method)
    if method in MERGE_METHODS:
        return MergeConfig(method=method, factor=args.factor)
    return PruneConfig(
        method=method,
        k=args.k,
        ratio=args.ratio,
        fixed_threshold=args.threshold,
        alpha=args.alpha,
        k_dup=args.k_dup,
        num_pivots=args.num_pivots,
        seed=args.seed,
    )


def default_grid(method: str) -> tuple[float, ...] | None:
    if method in ("docpruner", "attn_plus_sim", "pivot_threshold"):
        return DEFAULT_K_GRID
    if method in ("random", "attention_ratio"):
        return DEFAULT_RATIO_GRID
    if method == "pool2d":
        return DEFAULT_FACTOR_GRID_2D
    if method in ("sem_cluster", "pool1d"):
        return DEFAULT_FACTOR_GRID
    return None


def grid_configs(args, parser) -> list[PruneConfig | MergeConfig]:
    method = _canonical(args.method)
    if args.grid:
        try:
            values = [float(v) for v in args.grid.split(",") if v.strip()]
        except ValueError:
            parser.error(f"--grid must be comma-separated numbers, got {args.grid!r}")
        if not values:
            parser.error("--grid is empty")
    else:
        defaults = default_grid(method)
        if defaults is None:
            parser.error(f"method {args.method!r} has no default grid; pass --grid")
        values = list(defaults)

    base = build_config(args)
    configs = []
    for value in values:
        if isinstance(base, MergeConfig):
            configs.append(MergeConfig(method=method, factor=int(value)))
        elif method in ("random", "attention_ratio"):
            configs.append(
                PruneConfig(
                    method=method, ratio=value, seed=args.seed,
                )
            )
        elif method == "attention_threshold":
            configs.append(PruneConfig(method=method, fixed_threshold=value))
        else:
            configs.append(
                PruneConfig(
                    method=method,
                    k=value,
                    alpha=args.alpha,
                    k_dup=args.k_dup,
                    num_pivots=args.num_pivots,
                    seed=args.seed,
                )
            )
    return configs


def _add_io_options(parser, queries=True):
    parser.add_argument("--corpus", required=True, help="MVDR corpus file")
    if queries:
        parser.add_argument("--queries", required=True, help="MVDQ query file")
        parser.add_argument("--qrels", required=True, help="TREC-style qrels file")


def _add_method_options(parser):
    parser.add_argument("--method", choices=METHOD_CHOICES, default="docpruner")
    parser.add_argument("--k", type=float, default=-0.25, help="adaptation factor")
    parser.add_argument("--ratio", type=float, default=0.5, help="pruning ratio")
    parser.add_argument("--threshold", type=float, default=0.0, help="fixed attention threshold")
    parser.add_argument("--alpha", type=float, default=0.5, help="attention weight in attn-plus-sim")
    parser.add_argument("--k-dup", type=float, default=1.0, help="de-duplication factor")
    parser.add_argument("--num-pivots", type=int, default=10)
    parser.add_argument("--factor", type=int, default=2, help="merging factor")
    parser.add_argument("--seed", type=int, default=0)


def _add_output_options(parser):
    parser.add_argument("--cutoff", type=int, default=5)
    parser.add_argument("--threads", type=int, default=0, help="0 = auto")
    parser.add_argument("--out", default="-", help="report path, - for stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--figures", metavar="DIR", default=None,
                        help="also render PNG figures into DIR")


def make_parser() -> _Parser:
    parser = _Parser(prog="mvdr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="evaluate one configuration")
    _add_io_options(p_eval)
    _add_method_options(p_eval)
    _add_output_options(p_eval)

    p_sweep = sub.add_parser("sweep", help="evaluate a hyperparameter grid")
    _add_io_options(p_sweep)
    _add_method_options(p_sweep)
    _add_output_options(p_sweep)
    p_sweep.add_argument("--grid", default=None,
                         help="comma-separated grid values (default: the standard grid)")

    p_stats = sub.add_parser("stats", help="importance/entropy/ratio distributions")
    _add_io_options(p_stats, queries=False)
    _add_method_options(p_stats)
    p_stats.add_argument("--out", default="-")
    p_stats.add_argument("--format", choices=("json", "csv"), default="json")
    p_stats.add_argument("--figures", metavar="DIR", default=None)

    p_inspect = sub.add_parser("inspect", help="dump one document record")
    p_inspect.add_argument("--corpus", required=True)
    p_inspect.add_argument("--doc-id", default=None, help="omit to list document ids")
    p_inspect.add_argument("--embeddings", action="store_true", help="include the embedding matrix")
    p_inspect.add_argument("--out", default="-")

    p_validate = sub.add_parser("validate", help="check container files")
    p_validate.add_argument("--corpus", default=None)
    p_validate.add_argument("--queries", default=None)

    p_synth = sub.add_parser("synth", help="generate a synthetic benchmark")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--kind", choices=("planted", "entropy-mix"), default="planted")
    p_synth.add_argument("--docs", type=int, default=200)
    p_synth.add_argument("--dim", type=int, default=16)
    p_synth.add_argument("--seed", type=int, default=0)

    return parser


def _emit(args, payload: str) -> None:
    if args.out == "-":
        sys.stdout.write(payload)
        if not payload.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(args.out).write_text(payload, encoding="utf-8")


def _write_reports(args, reports: EvalReport | list[EvalReport]) -> None:
    if args.out == "-":
        import io

        buffer = io.StringIO()
        if args.format == "csv":
            _csv_to_stream(buffer, reports)
        else:
            payload = (
                report_to_dict(reports)
                if isinstance(reports, EvalReport)
                else [report_to_dict(r) for r in reports]
            )
            json.dump(payload, buffer, indent=2)
            buffer.write("\n")
        sys.stdout.write(buffer.getvalue())
    elif args.format == "csv":
        write_report_csv(args.out, reports)
    else:
        write_report_json(args.out, reports)


def _csv_to_stream(stream, reports) -> None:
    import csv as _csv

    from .evaluation import _CSV_PARAM_FIELDS

    if isinstance(reports, EvalReport):
        reports = [reports]
    writer = _csv.writer(stream)
    writer.writerow(["query_id", "ndcg", "method", *_CSV_PARAM_FIELDS])
    for report in reports:
        params = [report.config.get(name, "") for name in _CSV_PARAM_FIELDS]
        for query_id, value in report.per_query.items():
            writer.writerow([query_id, value, report.method, *params])


def _load_eval_inputs(args):
    corpus = container.read_corpus(args.corpus)
    queries = container.read_queries(args.queries)
    qrels = container.read_qrels(args.qrels)
    return corpus, queries, qrels


def cmd_evaluate(args) -> int:
    corpus, queries, qrels = _load_eval_inputs(args)
    config = build_config(args)
    report = evaluate_run(
        corpus, queries, qrels, config, cutoff=args.cutoff, threads=args.threads
    )
    _write_reports(args, report)
    if args.figures:
        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        figures.save_run_diagnostics(report, fig_dir / "run_diagnostics.png")
    return 0


def cmd_sweep(args, parser) -> int:
    corpus, queries, qrels = _load_eval_inputs(args)
    configs = grid_configs(args, parser)
    reports = sweep(
        corpus, queries, qrels, configs, cutoff=args.cutoff, threads=args.threads
    )
    _write_reports(args, reports)
    if args.figures:
        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        figures.save_frontier(reports, fig_dir / "frontier.png")
        figures.save_ratio_distribution(reports, fig_dir / "ratio_distribution.png")
    return 0


def cmd_stats(args) -> int:
    corpus = container.read_corpus(args.corpus)
    config = build_config(args)
    per_doc = {}
    kept_total = 0
    patch_total = 0
    for doc in corpus:
        scores = importance_of(doc)
        if isinstance(config, MergeConfig):
            from .mergers import merge

            kept = merge(doc, config).merged_embeddings.shape[0]
        elif config.method == "none":
            kept = doc.num_patches
        else:
            kept = prune(doc, scores, config).kept_indices.shape[0]
        kept_total += kept
        patch_total += doc.num_patches
        per_doc[doc.doc_id] = {
            "num_patches": doc.num_patches,
            "ratio": 1.0 - kept / doc.num_patches,
            "entropy": scores.entropy if math.isfinite(scores.entropy) else None,
            "mu": scores.mu,
            "sigma": scores.sigma,
        }

    dim = corpus[0].dim if corpus else 0
    entropies = [row["entropy"] for row in per_doc.values()]
    finite_entropies = [e for e in entropies if e is not None]
    summary = {
        "corpus": args.corpus,
        "num_docs": len(corpus),
        "method": config.method,
        "config": dataclasses.asdict(config),
        "mean_pruning_ratio": 1.0 - kept_total / patch_total if patch_total else 0.0,
        "mean_entropy": float(np.mean(finite_entropies)) if finite_entropies else None,
        "storage_bytes_before": storage_bytes(patch_total, dim),
        "storage_bytes_after": storage_bytes(kept_total, dim),
        "per_doc": per_doc,
    }

    if args.format == "csv":
        import io

        buffer = io.StringIO()
        buffer.write("doc_id,num_patches,ratio,entropy,mu,sigma\n")
        for doc_id, row in per_doc.items():
            entropy = "" if row["entropy"] is None else row["entropy"]
            buffer.write(
                f"{doc_id},{row['num_patches']},{row['ratio']},{entropy},{row['mu']},{row['sigma']}\n"
            )
        _emit(args, buffer.getvalue())
    else:
        _emit(args, json.dumps(summary, indent=2))

    if args.figures:
        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        figures.save_stats_histograms(
            entropies, [row["ratio"] for row in per_doc.values()],
            fig_dir / "stats_histograms.png",
        )
    return 0


def cmd_inspect(args) -> int:
    corpus = container.read_corpus(args.corpus)
    if args.doc_id is None:
        payload = {
            "path": args.corpus,
            "num_docs": len(corpus),
            "doc_ids": [doc.doc_id for doc in corpus],
        }
        _emit(args, json.dumps(payload, indent=2))
        return 0

    for doc in corpus:
        if doc.doc_id == args.doc_id:
            scores = importance_of(doc)
            payload = {
                "doc_id": doc.doc_id,
                "num_patches": doc.num_patches,
                "dim": doc.dim,
                "grid_rows": doc.grid_rows,
                "grid_cols": doc.grid_cols,
                "has_importance": doc.importance is not None,
                "has_head_attention": doc.head_attention is not None,
                "has_global_embedding": doc.global_embedding is not None,
                "importance": None if doc.importance is None else doc.importance.tolist(),
                "num_heads": None if doc.head_attention is None else doc.head_attention.shape[0],
                "derived_importance": scores.scores.tolist(),
                "mu": scores.mu,
                "sigma": scores.sigma,
                "entropy": scores.entropy if math.isfinite(scores.entropy) else None,
            }
            if args.embeddings:
                payload["embeddings"] = doc.embeddings.tolist()
            _emit(args, json.dumps(payload, indent=2))
            return 0

    raise MvdrError(f"document {args.doc_id!r} not found in {args.corpus}")


def cmd_validate(args, parser) -> int:
    if args.corpus is None and args.queries is None:
        parser.error("validate needs --corpus and/or --queries")
    if args.corpus is not None:
        docs = container.read_corpus(args.corpus)
        print(f"OK corpus: {len(docs)} documents ({args.corpus})")
    if args.queries is not None:
        queries = container.read_queries(args.queries)
        print(f"OK queries: {len(queries)} queries ({args.queries})")
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "planted":
        docs, queries, qrels = synthetic.planted_corpus(
            num_docs=args.docs, dim=args.dim, seed=args.seed
        )
        container.write_corpus(out_dir / "corpus.mvdr", docs)
        container.write_queries(out_dir / "queries.mvdq", queries)
        container.write_qrels(out_dir / "qrels.txt", qrels)
        print(f"wrote {len(docs)} docs, {len(queries)} queries to {out_dir}")
    else:
        one_hot, uniform = synthetic.entropy_mix_corpus(
            num_per_group=args.docs // 2, dim=args.dim, seed=args.seed
        )
        container.write_corpus(out_dir / "corpus.mvdr", one_hot + uniform)
        print(f"wrote {len(one_hot) + len(uniform)} docs to {out_dir}")
    return 0


def run(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "evaluate":
            return cmd_evaluate(args)
        if args.command == "sweep":
            return cmd_sweep(args, parser)
        if args.command == "stats":
            return cmd_stats(args)
        if args.command == "inspect":
            return cmd_inspect(args)
        if args.command == "validate":
            return cmd_validate(args, parser)
        if args.command == "synth":
            return cmd_synth(args)
        parser.error(f"unknown command {args.command!r}")
    except (MvdrError, OSError) as exc:
        print(f"mvdr: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
