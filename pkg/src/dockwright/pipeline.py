"""Glue between the stages: corpus in, clustered failures out.

Keeps the per-stage modules free of each other's types. Everything here
is a thin composition: pick failing records, tail and tokenize their
logs, embed, cluster, and persist the assignment next to the corpus with
a digest so consumers can tell when it went stale.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cluster import (
    ClusterAssignment,
    ClusteringParams,
    GridSearchReport,
    grid_search,
    hdbscan,
)
from .config import Config
from .corpus import BuildOutcome, BuildRecord
from .embed import EmbedderConfig, embed_batch
from .errors import ValidationError
from .logpipe import TokenSequence, tail_error_log, tokenize
from .search import STOPWORDS


def failing_records(records) -> list[BuildRecord]:
    return [r for r in records if r.outcome == BuildOutcome.FAILURE]


def record_tokens(record: BuildRecord, config: Config | None = None) -> TokenSequence:
    """Tokens from the tail of the record's error log."""
    config = config or Config.load()
    tail = tail_error_log(record.stderr_log, config.tail_lines, record.stdout_log)
    return tokenize(tail, origin_record=record.record_id)


def embedder_config(config: Config | None = None) -> EmbedderConfig:
    config = config or Config.load()
    return EmbedderConfig(
        kind=config.embedder_kind,
        dim=config.embed_dim,
        ngram_min=config.ngram_min,
        ngram_max=config.ngram_max,
        include_word_unigrams=config.include_word_unigrams,
        remote_url=config.embedder_url,
    )


def embed_records(records, config: Config | None = None) -> np.ndarray:
    config = config or Config.load()
    seqs = [record_tokens(r, config) for r in records]
    return embed_batch(seqs, embedder_config(config))


@dataclass(frozen=True)
class CorpusClustering:
    """A clustering of the failing subset of a corpus."""

    record_ids: tuple[str, ...]
    assignment: ClusterAssignment
    report: GridSearchReport | None = None

    def label_of(self, record_id: str) -> int:
        return self.labels_by_id[record_id]

    @property
    def labels_by_id(self) -> dict[str, int]:
        return dict(zip(self.record_ids, self.assignment.labels))

    def cluster_members(self, cluster_id: int) -> list[str]:
        return [
            rid
            for rid, label in zip(self.record_ids, self.assignment.labels)
            if label == cluster_id
        ]


def cluster_corpus(
    records,
    config: Config | None = None,
    params: ClusteringParams | None = None,
    use_grid: bool = False,
) -> CorpusClustering:
    """Cluster the failing records of a corpus; with use_grid the
    default hyperparameter grid picks the configuration."""
    config = config or Config.load()
    failures = failing_records(records)
    vectors = embed_records(failures, config)
    report = None
    if use_grid:
        report = grid_search(vectors)
        chosen = report.best_params
    else:
        chosen = params or ClusteringParams(
            min_cluster_size=config.min_cluster_size, min_samples=config.min_samples
        )
    assignment = hdbscan(vectors, chosen)
    return CorpusClustering(
        tuple(r.record_id for r in failures), assignment, report
    )


def corpus_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def top_terms(records, n: int = 5) -> list[str]:
    """Most frequent non-stopword tokens across the records' log tails;
    ties resolve alphabetically."""
    counts: Counter[str] = Counter()
    for record in records:
        counts.update(t for t in record_tokens(record) if t not in STOPWORDS)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [t for t, _ in ranked[:n]]


def save_assignment(path, clustering: CorpusClustering, digest: str) -> None:
    """Persist labels keyed by record id, plus the digest of the corpus
    file the clustering came from."""
    payload = {
        "corpus_digest": digest,
        "params": {
            "min_cluster_size": clustering.assignment.params.min_cluster_size,
            "min_samples": clustering.assignment.params.min_samples,
        },
        "labels": clustering.labels_by_id,
        "stabilities": {
            str(cid): val for cid, val in clustering.assignment.stabilities.items()
        },
    }
    if clustering.report is not None:
        payload["grid"] = [
            {
                "min_cluster_size": p.min_cluster_size,
                "min_samples": p.min_samples,
                "clustered_fraction": frac,
                "cluster_count": count,
            }
            for p, frac, count in clustering.report.evaluated
        ]
        payload["grid_best"] = clustering.report.best
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_assignment(path) -> tuple[CorpusClustering, str]:
    """Inverse of save_assignment; returns the clustering and the corpus
    digest recorded with it."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"assignment file is not valid JSON: {exc}") from exc
    try:
        params = ClusteringParams(
            min_cluster_size=payload["params"]["min_cluster_size"],
            min_samples=payload["params"]["min_samples"],
        )
        labels_by_id = payload["labels"]
        record_ids = tuple(labels_by_id)
        labels = tuple(int(labels_by_id[rid]) for rid in record_ids)
        stabilities = {int(k): float(v) for k, v in payload["stabilities"].items()}
        digest = payload["corpus_digest"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"assignment file malformed: {exc}") from exc
    assignment = ClusterAssignment(labels, stabilities, params)
    report = None
    if "grid" in payload:
        evaluated = tuple(
            (
                ClusteringParams(row["min_cluster_size"], row["min_samples"]),
                float(row["clustered_fraction"]),
                int(row["cluster_count"]),
            )
            for row in payload["grid"]
        )
        report = GridSearchReport(evaluated, int(payload["grid_best"]))
    return CorpusClustering(record_ids, assignment, report), digest
