"""Command-line front end; every subcommand is a thin composition of
the library modules.

Exit codes: 0 success, 1 bad input data (validation), 2 configuration
or I/O trouble. Argument errors exit 2 through argparse itself.
"""
from __future__ import annotations

import argparse
import csv
import difflib
import json
import sys
from pathlib import Path

from .builder import BuildJob, run_batch
from .cluster import ClusteringParams
from .config import Config
from .corpus import corpus_stats, ingest_corpus, persist_corpus
from .errors import ConfigError, ValidationError
from .metrics import repair_coverage, solution_proportions
from .pipeline import cluster_corpus, corpus_digest, load_assignment, save_assignment
from .rules import Repaired, SearchFallback, Suggested, default_rules, load_rules, repair
from .search import build_query, make_searcher
from .workbench import serve


def _config(args) -> Config:
    return Config.load(args.config)


def _ingest(args) -> int:
    result = ingest_corpus(args.corpus)
    stats = corpus_stats(result.records)
    for reject in result.rejects:
        print(f"rejected line {reject.line_no}: {reject.reason}", file=sys.stderr)
    print(
        f"records {stats.total}  success {stats.successes}  "
        f"failure {stats.failures}  timeout {stats.timeouts}  "
        f"undetermined {stats.undetermined}  breakage {stats.breakage_rate:.4f}"
    )
    if args.out:
        persist_corpus(result.records, args.out)
        print(f"wrote {args.out}")
    return 0


def _build(args) -> int:
    config = _config(args)
    try:
        raw = json.loads(Path(args.jobs).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"jobs file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ValidationError("jobs file must hold a JSON array")
    jobs = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or "repo" not in entry:
            raise ValidationError(f"jobs entry {i} must be an object with a 'repo' key")
        jobs.append(
            BuildJob(
                repo_ref=entry["repo"],
                dockerfile_path=entry.get("dockerfile", "Dockerfile"),
                context_dir=entry.get("context", "."),
                timeout_limit=float(entry.get("timeout", config.timeout_limit)),
            )
        )
    records = run_batch(jobs, args.parallelism, config, corpus_path=args.out)
    for record in records:
        print(f"{record.record_id}  {record.outcome.value}  {record.repo_ref}")
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cluster(args) -> int:
    config = _config(args)
    result = ingest_corpus(args.corpus)
    params = None
    if not args.grid:
        params = ClusteringParams(args.min_cluster_size, args.min_samples)
    clustering = cluster_corpus(result.records, config, params, use_grid=args.grid)
    out = args.out or f"{args.corpus}.assignment.json"
    save_assignment(out, clustering, corpus_digest(args.corpus))
    assignment = clustering.assignment
    if clustering.report is not None:
        for p, frac, count in clustering.report.evaluated:
            print(
                f"mcs={p.min_cluster_size:<3d} k={p.min_samples:<2d} "
                f"clustered={frac:.3f} clusters={count}"
            )
        best = clustering.report.best_params
        print(f"best: mcs={best.min_cluster_size} k={best.min_samples}")
    print(
        f"{assignment.cluster_count} clusters, "
        f"{sum(1 for l in assignment.labels if l == -1)} noise, "
        f"clustered fraction {assignment.clustered_fraction:.3f}"
    )
    print(f"wrote {out}")
    return 0


def _load_db(args):
    if args.rules:
        return load_rules(args.rules)
    return default_rules()


def _repair(args) -> int:
    config = _config(args)
    result = ingest_corpus(args.corpus)
    by_id = {r.record_id: r for r in result.records}
    record = by_id.get(args.record)
    if record is None:
        raise ValidationError(f"no record {args.record!r} in {args.corpus}")
    db = _load_db(args)
    searcher = make_searcher(config.search_url, config.search_allowlist)
    outcome = repair(record, db, searcher)
    if isinstance(outcome, Repaired):
        out_dir = Path(args.out_dir) if args.out_dir else Path(args.corpus).parent
        out_dir.mkdir(parents=True, exist_ok=True)
        base = Path(record.dockerfile_path).name
        for variant in outcome.variants:
            path = out_dir / f"{base}.fix{variant.solution_index + 1}"
            path.write_text(variant.patched_text, encoding="utf-8")
            diff = "".join(
                difflib.unified_diff(
                    record.dockerfile_text.splitlines(keepends=True),
                    variant.patched_text.splitlines(keepends=True),
                    fromfile=f"a/{record.dockerfile_path}",
                    tofile=f"b/{record.dockerfile_path}",
                )
            )
            print(f"rule {outcome.rule_id} solution {variant.solution_index}: {path}")
            sys.stdout.write(diff)
        return 0
    if isinstance(outcome, Suggested):
        print(f"suggestion {outcome.suggestion_id}: {outcome.message}")
        return 0
    assert isinstance(outcome, SearchFallback)
    if outcome.query is None:
        print("no rule matched and the log yields no search keywords")
        return 0
    print(f"no rule matched; search query: {outcome.query.query_string}")
    for res in outcome.results:
        print(f"  {res.url}  {res.title}")
    if not outcome.results:
        print("  (no search backend configured or no allowlisted results)")
    return 0


def _search(args) -> int:
    config = _config(args)
    result = ingest_corpus(args.corpus)
    by_id = {r.record_id: r for r in result.records}
    record = by_id.get(args.record)
    if record is None:
        raise ValidationError(f"no record {args.record!r} in {args.corpus}")
    query = build_query(record, config.search_max_keywords)
    print(f"query: {query.query_string}")
    searcher = make_searcher(config.search_url, config.search_allowlist)
    if searcher is None:
        print("(no search backend configured)")
        return 0
    for res in searcher(query):
        print(f"{res.url}  {res.title}")
    return 0


def _clustering_for_report(args, config, records):
    if args.assignment and Path(args.assignment).exists():
        clustering, _ = load_assignment(args.assignment)
        return clustering
    return cluster_corpus(records, config)


def _report(args) -> int:
    config = _config(args)
    result = ingest_corpus(args.corpus)
    clustering = _clustering_for_report(args, config, result.records)
    db = _load_db(args)
    labels = clustering.labels_by_id
    failures = [r for r in result.records if r.record_id in labels]
    sink = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(sink)
        if args.kind == "coverage":
            writer.writerow(
                ["rule_id", "cluster_count", "parent_coverage", "average_coverage"]
            )
            for row in repair_coverage(db, labels, failures):
                writer.writerow(
                    [
                        row.rule_id,
                        row.cluster_count,
                        "" if row.parent_coverage is None else f"{row.parent_coverage:.4f}",
                        f"{row.average_coverage:.4f}",
                    ]
                )
        else:
            writer.writerow(
                ["cluster_id", "repaired_frac", "suggested_frac", "unknown_frac"]
            )
            for prop in solution_proportions(db, labels, failures):
                writer.writerow(
                    [
                        prop.cluster_id,
                        f"{prop.repaired_frac:.4f}",
                        f"{prop.suggested_frac:.4f}",
                        f"{prop.unknown_frac:.4f}",
                    ]
                )
    finally:
        if sink is not sys.stdout:
            sink.close()
            print(f"wrote {args.out}")
    return 0


def _serve(args) -> int:
    config = _config(args)
    serve(
        args.corpus,
        rules_path=args.rules,
        assignment_path=args.assignment,
        config=config,
        port=args.port,
        ui_dir=args.ui_dir,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dockwright",
        description="Triage Dockerfile build failures and draft repairs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="config file (JSON)")

    p = sub.add_parser("ingest", help="validate and summarize a corpus file")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None, help="re-serialize accepted records here")
    p.set_defaults(func=_ingest)

    p = sub.add_parser("build", help="run container builds from a jobs file")
    common(p)
    p.add_argument("--jobs", required=True, help="JSON array of build jobs")
    p.add_argument("--out", required=True, help="corpus file to append records to")
    p.add_argument("--parallelism", type=int, default=None)
    p.set_defaults(func=_build)

    p = sub.add_parser("cluster", help="embed and cluster failing records")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None, help="assignment file (default <corpus>.assignment.json)")
    p.add_argument("--grid", action="store_true", help="pick hyperparameters by grid search")
    p.add_argument("--min-cluster-size", type=int, default=3)
    p.add_argument("--min-samples", type=int, default=3)
    p.set_defaults(func=_cluster)

    p = sub.add_parser("repair", help="triage one failing record")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--record", required=True)
    p.add_argument("--rules", default=None, help="rule db (default: shipped rules)")
    p.add_argument("--out-dir", default=None, help="where .fixN variants land")
    p.set_defaults(func=_repair)

    p = sub.add_parser("search", help="show search leads for one record")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--record", required=True)
    p.set_defaults(func=_search)

    p = sub.add_parser("report", help="coverage or solution-proportion tables")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--assignment", default=None)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--coverage", dest="kind", action="store_const", const="coverage"
    )
    group.add_argument(
        "--proportions", dest="kind", action="store_const", const="proportions"
    )
    p.add_argument("--out", default=None, help="CSV file (default stdout)")
    p.set_defaults(func=_report)

    p = sub.add_parser("serve", help="run the HTTP workbench")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--assignment", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--ui-dir", default=None, help="serve a static UI from this directory")
    p.set_defaults(func=_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
