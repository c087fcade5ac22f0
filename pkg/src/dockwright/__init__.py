"""Dockerfile build-failure triage: ingest build records, cluster the
failures by error signature, and draft rule-based repairs with a human
in the loop."""

from .cluster import (
    ClusterAssignment,
    ClusteringParams,
    GridSearchReport,
    grid_search,
    hdbscan,
)
from .config import Config
from .corpus import (
    BuildOutcome,
    BuildRecord,
    classify_outcome,
    corpus_stats,
    ingest_corpus,
    persist_corpus,
)
from .dockerfile import DockerfileAst, Instruction, SourceSpan, parse, serialize, splice
from .embed import EmbedderConfig, embed, embed_batch
from .errors import ConfigError, ValidationError
from .logpipe import normalize, tail_error_log, tokenize
from .metrics import patch_equivalence, repair_coverage, solution_proportions
from .pipeline import cluster_corpus, failing_records
from .rules import (
    Pattern,
    RepairRule,
    RuleDb,
    Suggestion,
    apply_solution,
    default_rules,
    dry_run,
    load_rules,
    match_rule,
    repair,
    save_rules,
)
from .search import SearchQuery, SearchResult, build_query, extract_keywords, search_top5

__version__ = "0.1.0"

__all__ = [
    "BuildOutcome",
    "BuildRecord",
    "ClusterAssignment",
    "ClusteringParams",
    "Config",
    "ConfigError",
    "DockerfileAst",
    "EmbedderConfig",
    "GridSearchReport",
    "Instruction",
    "Pattern",
    "RepairRule",
    "RuleDb",
    "SearchQuery",
    "SearchResult",
    "SourceSpan",
    "Suggestion",
    "ValidationError",
    "apply_solution",
    "build_query",
    "classify_outcome",
    "cluster_corpus",
    "corpus_stats",
    "default_rules",
    "dry_run",
    "embed",
    "embed_batch",
    "extract_keywords",
    "failing_records",
    "grid_search",
    "hdbscan",
    "ingest_corpus",
    "load_rules",
    "match_rule",
    "normalize",
    "parse",
    "patch_equivalence",
    "persist_corpus",
    "repair",
    "repair_coverage",
    "save_rules",
    "search_top5",
    "serialize",
    "solution_proportions",
    "splice",
    "tail_error_log",
    "tokenize",
    "__version__",
]
