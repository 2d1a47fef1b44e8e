"""Storage-efficient multi-vector visual document retrieval.

Adaptive attention-statistic patch pruning, the standard merging and
pruning baselines, late-interaction MaxSim scoring, and an nDCG@k
evaluation harness over a compact binary container format.
"""

from .container import (
    DocumentRecord,
    Qrels,
    QueryRecord,
    read_corpus,
    read_qrels,
    read_queries,
    write_corpus,
    write_qrels,
    write_queries,
)
from .evaluation import (
    EvalReport,
    evaluate_run,
    ndcg_at_k,
    storage_bytes,
    sweep,
    write_report_csv,
    write_report_json,
)
from .importance import (
    ImportanceScores,
    attention_distribution,
    average_heads,
    importance_of,
)
from .mergers import (
    MergeConfig,
    MergedDocument,
    merge,
    pool1d_merge,
    pool2d_merge,
    sem_cluster_merge,
)
from .numerics import cosine_sim, mean, shannon_entropy, std_pop
from .pruners import (
    PruneConfig,
    PrunedDocument,
    adaptive_threshold,
    attention_ratio_prune,
    attention_threshold_prune,
    attn_plus_sim_prune,
    docpruner_prune,
    pivot_threshold_prune,
    prune,
    random_prune,
)
from .retrieval import RankedList, maxsim_score, rank_corpus, retrieve_topk

__version__ = "0.1.0"

__all__ = [
    "DocumentRecord",
    "QueryRecord",
    "Qrels",
    "read_corpus",
    "write_corpus",
    "read_queries",
    "write_queries",
    "read_qrels",
    "write_qrels",
    "ImportanceScores",
    "average_heads",
    "importance_of",
    "attention_distribution",
    "PruneConfig",
    "PrunedDocument",
    "adaptive_threshold",
    "docpruner_prune",
    "attention_ratio_prune",
    "attention_threshold_prune",
    "random_prune",
    "attn_plus_sim_prune",
    "pivot_threshold_prune",
    "prune",
    "MergeConfig",
    "MergedDocument",
    "sem_cluster_merge",
    "pool1d_merge",
    "pool2d_merge",
    "merge",
    "RankedList",
    "maxsim_score",
    "rank_corpus",
    "retrieve_topk",
    "EvalReport",
    "ndcg_at_k",
    "storage_bytes",
    "evaluate_run",
    "sweep",
    "write_report_json",
    "write_report_csv",
    "mean",
    "std_pop",
    "cosine_sim",
    "shannon_entropy",
    "__version__",
]
