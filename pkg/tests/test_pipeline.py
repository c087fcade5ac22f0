"""End-to-end composition: records to clusters to saved assignments.

The two synthetic failure families (apt packages, ruby versions) must
land in two clean clusters. Frozen stability values were computed once
with the plain-python reference implementation and asserted here so the
production path cannot drift silently.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter

import numpy as np
import pytest

from dockwright.cluster import ClusteringParams
from dockwright.config import Config
from dockwright.errors import ValidationError
from dockwright.pipeline import (
    CorpusClustering,
    cluster_corpus,
    corpus_digest,
    embed_records,
    failing_records,
    record_tokens,
    save_assignment,
    load_assignment,
    top_terms,
)

PARAMS = ClusteringParams(min_cluster_size=3, min_samples=3)

FROZEN_STABILITIES = {0: 11.674266886976092, 1: 28.700061685282883}
APT_TOP_TERMS = ["100", "apt", "bin", "c", "code"]
RUBY_TOP_TERMS = ["6", "2", "aborted", "bundle", "continue"]


def test_failing_records_filters_outcomes(full_records):
    failures = failing_records(full_records)
    assert len(failures) == 22
    ids = {r.record_id for r in failures}
    assert ids.isdisjoint({"ok0", "to0", "ud0"})


def test_record_tokens_tail_then_tokenize(family_records):
    seq = record_tokens(family_records[0])
    assert seq.origin_record == "a0"
    for word in ("unable", "locate", "package", "python", "pip"):
        assert word in tuple(seq)


def test_record_tokens_respects_tail_config(family_records):
    # a one-line tail keeps only the final stderr line
    cfg = Config(tail_lines=1)
    seq = record_tokens(family_records[0], cfg)
    assert "unable" not in tuple(seq)
    assert "returned" in tuple(seq)


def test_embed_records_shape_and_norm(full_records):
    failures = failing_records(full_records)
    vectors = embed_records(failures)
    assert vectors.shape == (22, 256)
    norms = np.linalg.norm(vectors, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-9)


def test_cluster_corpus_separates_families(family_records):
    clustering = cluster_corpus(family_records, params=PARAMS)
    labels = clustering.labels_by_id
    assert all(labels[f"a{i}"] == 0 for i in range(10))
    assert all(labels[f"b{i}"] == 1 for i in range(10))
    assert clustering.assignment.stabilities == pytest.approx(FROZEN_STABILITIES)
    assert clustering.report is None


def test_cluster_corpus_ignores_non_failures(full_records):
    clustering = cluster_corpus(full_records, params=PARAMS)
    assert len(clustering.record_ids) == 22
    counts = Counter(clustering.assignment.labels)
    assert counts == Counter({0: 10, 1: 10, -1: 2})
    assert clustering.label_of("npm0") == -1
    assert clustering.label_of("mys0") == -1


def test_cluster_members_keep_record_order(family_records):
    clustering = cluster_corpus(family_records, params=PARAMS)
    assert clustering.cluster_members(0) == [f"a{i}" for i in range(10)]
    assert clustering.cluster_members(1) == [f"b{i}" for i in range(10)]
    assert clustering.cluster_members(99) == []


def test_label_of_unknown_record_raises(family_records):
    clustering = cluster_corpus(family_records, params=PARAMS)
    with pytest.raises(KeyError):
        clustering.label_of("zz9")


def test_cluster_corpus_grid_mode(family_records):
    clustering = cluster_corpus(family_records, use_grid=True)
    assert clustering.report is not None
    assert len(clustering.report.evaluated) == 32
    chosen = clustering.report.best_params
    assert clustering.assignment.params == chosen
    assert clustering.assignment.cluster_count >= 2


def test_top_terms_frozen(family_records):
    apt = [r for r in family_records if r.record_id.startswith("a")]
    ruby = [r for r in family_records if r.record_id.startswith("b")]
    assert top_terms(apt) == APT_TOP_TERMS
    assert top_terms(ruby) == RUBY_TOP_TERMS


def test_top_terms_n_and_empty(family_records):
    apt = [r for r in family_records if r.record_id.startswith("a")]
    assert top_terms(apt, n=2) == APT_TOP_TERMS[:2]
    assert top_terms([]) == []


def test_corpus_digest_is_sha256_of_bytes(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_bytes(b'{"id": "x"}\n')
    assert corpus_digest(path) == hashlib.sha256(b'{"id": "x"}\n').hexdigest()
    path.write_bytes(b'{"id": "y"}\n')
    assert corpus_digest(path) == hashlib.sha256(b'{"id": "y"}\n').hexdigest()


def test_assignment_round_trip(tmp_path, family_records):
    clustering = cluster_corpus(family_records, params=PARAMS)
    path = tmp_path / "assignment.json"
    save_assignment(path, clustering, "deadbeef")
    loaded, digest = load_assignment(path)
    assert digest == "deadbeef"
    assert loaded.record_ids == clustering.record_ids
    assert loaded.assignment.labels == clustering.assignment.labels
    assert loaded.assignment.params == PARAMS
    assert loaded.assignment.stabilities == pytest.approx(
        clustering.assignment.stabilities
    )
    assert loaded.report is None


def test_assignment_round_trip_with_grid(tmp_path, family_records):
    clustering = cluster_corpus(family_records, use_grid=True)
    path = tmp_path / "assignment.json"
    save_assignment(path, clustering, "cafe")
    loaded, _ = load_assignment(path)
    assert loaded.report is not None
    assert loaded.report.evaluated == clustering.report.evaluated
    assert loaded.report.best == clustering.report.best


def test_load_assignment_rejects_bad_json(tmp_path):
    path = tmp_path / "assignment.json"
    path.write_text("{nope", encoding="utf-8")
    with pytest.raises(ValidationError, match="not valid JSON"):
        load_assignment(path)


def test_load_assignment_rejects_missing_fields(tmp_path):
    path = tmp_path / "assignment.json"
    path.write_text(json.dumps({"labels": {"a": 0}}), encoding="utf-8")
    with pytest.raises(ValidationError, match="malformed"):
        load_assignment(path)


def test_corpus_clustering_is_frozen(family_records):
    clustering = cluster_corpus(family_records, params=PARAMS)
    with pytest.raises(AttributeError):
        clustering.record_ids = ()
