"""HTTP workbench: the human-in-the-loop surface over the pipeline.

Serves cluster browsing, record inspection, rule dry-runs, rule saves,
search leads, and repair previews from one process. Reads are consistent
snapshots; rule saves are serialized behind a single lock and persisted
atomically, so a save is visible to every later request. Cluster views
carry a stale flag that flips when the corpus file on disk no longer
matches the clustering held in memory.
"""
from __future__ import annotations

import difflib
import json
import mimetypes
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .config import Config
from .corpus import BuildOutcome, BuildRecord, ingest_corpus, record_to_wire
from .errors import ConfigError, ValidationError
from .logpipe import tail_error_log
from .pipeline import (
    CorpusClustering,
    cluster_corpus,
    corpus_digest,
    load_assignment,
    top_terms,
)
from .rules import (
    RepairRule,
    Repaired,
    RuleDb,
    RuleLoadError,
    SearchFallback,
    Suggested,
    apply_solution,
    db_to_wire,
    dry_run,
    load_rules,
    match_rule,
    record_log_text,
    repair,
    rule_from_wire,
    save_rules,
)
from .search import SearchBackendError, build_query, make_searcher

DEFAULT_PORT = 7341
BIND_HOST = "127.0.0.1"


@dataclass
class WorkbenchState:
    """Everything a request can touch, guarded by one lock."""

    config: Config
    corpus_path: Path
    rules_path: Path | None
    records: dict[str, BuildRecord]
    clustering: CorpusClustering
    db: RuleDb
    digest: str
    ui_dir: Path | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def stale(self) -> bool:
        try:
            return corpus_digest(self.corpus_path) != self.digest
        except OSError:
            return True


def load_state(
    corpus_path,
    rules_path=None,
    assignment_path=None,
    config: Config | None = None,
    ui_dir=None,
) -> WorkbenchState:
    """Assemble workbench state; a missing corpus is fatal, a missing
    rules file just starts the database empty."""
    config = config or Config.load()
    corpus_path = Path(corpus_path)
    if not corpus_path.exists():
        raise ConfigError(f"corpus file {corpus_path} does not exist")
    result = ingest_corpus(corpus_path)
    records = {r.record_id: r for r in result.records}
    digest = corpus_digest(corpus_path)

    clustering = None
    if assignment_path is not None and Path(assignment_path).exists():
        loaded, saved_digest = load_assignment(assignment_path)
        known = set(records)
        if saved_digest == digest and all(r in known for r in loaded.record_ids):
            clustering = loaded
    if clustering is None:
        clustering = cluster_corpus(result.records, config)

    if rules_path is not None and Path(rules_path).exists():
        db = load_rules(rules_path)
    else:
        db = RuleDb()
    return WorkbenchState(
        config=config,
        corpus_path=corpus_path,
        rules_path=Path(rules_path) if rules_path is not None else None,
        records=records,
        clustering=clustering,
        db=db,
        digest=digest,
        ui_dir=Path(ui_dir) if ui_dir is not None else None,
    )


def _unified_diff(record: BuildRecord, patched: str, label: str) -> str:
    return "".join(
        difflib.unified_diff(
            record.dockerfile_text.splitlines(keepends=True),
            patched.splitlines(keepends=True),
            fromfile=f"a/{record.dockerfile_path}",
            tofile=f"b/{record.dockerfile_path}",
        )
    ) or f"(no change: {label})"


class WorkbenchHandler(BaseHTTPRequestHandler):
    state: WorkbenchState  # injected by build_server

    # --- plumbing ---

    def log_message(self, fmt, *args):
        pass

    def _json(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str, **extra) -> None:
        self._json(status, {"error": message, **extra})

    def _body(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return None
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return ...  # sentinel: unparseable

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    # --- GET routes ---

    def do_GET(self):
        parts = urlsplit(self.path)
        segs = [s for s in parts.path.split("/") if s]
        try:
            if segs == ["clusters"]:
                return self._get_clusters()
            if len(segs) == 2 and segs[0] == "clusters":
                return self._get_cluster(segs[1])
            if len(segs) == 2 and segs[0] == "records":
                return self._get_record(segs[1])
            if segs == ["rules"]:
                return self._get_rules()
            if segs == ["search"]:
                return self._get_search(parse_qs(parts.query))
            if self.state.ui_dir is not None:
                return self._get_static(parts.path)
            return self._error(404, f"no such resource: {parts.path}")
        except BrokenPipeError:
            pass

    def _snapshot(self):
        with self.state.lock:
            return self.state.clustering, self.state.db

    def _get_clusters(self):
        clustering, _ = self._snapshot()
        assignment = clustering.assignment
        records = self.state.records
        clusters = []
        for cid in sorted(assignment.stabilities):
            member_ids = clustering.cluster_members(cid)
            members = [records[r] for r in member_ids if r in records]
            clusters.append(
                {
                    "cluster_id": cid,
                    "size": len(member_ids),
                    "stability": assignment.stabilities[cid],
                    "top_terms": top_terms(members, n=5),
                }
            )
        noise = sum(1 for l in assignment.labels if l == -1)
        self._json(
            200,
            {
                "stale": self.state.stale(),
                "noise": noise,
                "total": assignment.n_points,
                "params": {
                    "min_cluster_size": assignment.params.min_cluster_size,
                    "min_samples": assignment.params.min_samples,
                },
                "clusters": clusters,
            },
        )

    def _resolve_cluster(self, raw: str, clustering) -> int | None:
        try:
            cid = int(raw)
        except ValueError:
            return None
        if cid not in clustering.assignment.stabilities:
            return None
        return cid

    def _get_cluster(self, raw: str):
        clustering, _ = self._snapshot()
        cid = self._resolve_cluster(raw, clustering)
        if cid is None:
            return self._error(404, f"no such cluster: {raw}")
        members = []
        for rid in clustering.cluster_members(cid):
            record = self.state.records[rid]
            members.append(
                {
                    "record_id": rid,
                    "repo": record.repo_ref,
                    "dockerfile_path": record.dockerfile_path,
                    "log_tail": tail_error_log(
                        record.stderr_log,
                        self.state.config.tail_lines,
                        record.stdout_log,
                    ),
                }
            )
        self._json(
            200,
            {
                "cluster_id": cid,
                "stability": clustering.assignment.stabilities[cid],
                "members": members,
            },
        )

    def _get_record(self, rid: str):
        record = self.state.records.get(rid)
        if record is None:
            return self._error(404, f"no such record: {rid}")
        payload = record_to_wire(record)
        with self.state.lock:
            label = self.state.clustering.labels_by_id.get(rid)
        payload["cluster"] = label
        self._json(200, payload)

    def _get_rules(self):
        _, db = self._snapshot()
        self._json(200, db_to_wire(db))

    def _get_search(self, query):
        rid = (query.get("record") or [None])[0]
        if rid is None:
            return self._error(400, "query parameter record=<id> required")
        record = self.state.records.get(rid)
        if record is None:
            return self._error(404, f"no such record: {rid}")
        try:
            sq = build_query(record, self.state.config.search_max_keywords)
        except ValidationError:
            return self._json(200, {"query": None, "results": []})
        searcher = make_searcher(
            self.state.config.search_url, self.state.config.search_allowlist
        )
        if searcher is None:
            return self._json(200, {"query": sq.query_string, "results": []})
        try:
            results = searcher(sq)
        except SearchBackendError as exc:
            return self._error(502, str(exc))
        self._json(
            200,
            {
                "query": sq.query_string,
                "results": [
                    {"url": r.url, "title": r.title, "source_domain": r.source_domain}
                    for r in results
                ],
            },
        )

    def _get_static(self, path: str):
        root = self.state.ui_dir.resolve()
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if root not in target.parents and target != root:
            return self._error(404, "not found")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return self._error(404, f"no such file: {path}")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    # --- POST routes ---

    def do_POST(self):
        parts = urlsplit(self.path)
        segs = [s for s in parts.path.split("/") if s]
        body = self._body()
        if body is ... or (body is not None and not isinstance(body, dict)):
            return self._error(400, "request body must be a JSON object")
        try:
            if segs == ["rules", "dry-run"]:
                return self._post_dry_run(body or {})
            if segs == ["rules"]:
                return self._post_rules(body or {})
            if len(segs) == 2 and segs[0] == "repair":
                return self._post_repair(segs[1])
            return self._error(404, f"no such resource: {parts.path}")
        except BrokenPipeError:
            pass

    def _parse_draft(self, payload):
        """(rule, error_response_args). Regex errors name the field."""
        entry = payload.get("rule")
        if not isinstance(entry, dict):
            return None, (400, "body must carry a rule object")
        kind = payload.get("kind") or (
            "repair" if "solutions" in entry else "suggestion"
        )
        for fld in ("static_re", "dynamic_re"):
            value = entry.get(fld)
            if value is None:
                continue
            try:
                re.compile(value)
            except re.error as exc:
                return None, (400, f"invalid regex: {exc}", {"field": fld})
        try:
            rule = rule_from_wire(kind, entry)
        except (RuleLoadError, ValidationError) as exc:
            return None, (400, str(exc))
        return rule, None

    def _post_dry_run(self, payload):
        rule, err = self._parse_draft(payload)
        if err is not None:
            status, message, *extra = err
            return self._error(status, message, **(extra[0] if extra else {}))
        clustering, _ = self._snapshot()
        cluster_id = payload.get("cluster_id")
        if cluster_id is not None:
            cid = self._resolve_cluster(str(cluster_id), clustering)
            if cid is None:
                return self._error(404, f"no such cluster: {cluster_id}")
            records = [
                self.state.records[r] for r in clustering.cluster_members(cid)
            ]
        else:
            records = [
                r
                for r in self.state.records.values()
                if r.outcome == BuildOutcome.FAILURE
            ]
        report = dry_run(rule, records)
        preview = None
        preview_id = payload.get("preview_record")
        if preview_id is not None:
            record = self.state.records.get(preview_id)
            if record is None:
                return self._error(404, f"no such record: {preview_id}")
            preview = self._preview(rule, record)
        self._json(
            200,
            {
                "matched_ids": list(report.matched_ids),
                "fraction": report.fraction,
                "total": report.total,
                "preview": preview,
            },
        )

    def _preview(self, rule, record):
        binding = match_rule(
            rule.pattern, record.dockerfile_text, record_log_text(record)
        )
        if binding is None or not isinstance(rule, RepairRule):
            return None
        variants = []
        for i, solution in enumerate(rule.solutions):
            try:
                patched = apply_solution(record.dockerfile_text, solution, binding)
            except ValidationError as exc:
                variants.append({"solution_index": i, "error": str(exc)})
                continue
            variants.append(
                {
                    "solution_index": i,
                    "diff": _unified_diff(record, patched, f"solution {i}"),
                }
            )
        return {"variants": variants}

    def _post_rules(self, payload):
        rule, err = self._parse_draft(payload)
        if err is not None:
            status, message, *extra = err
            return self._error(status, message, **(extra[0] if extra else {}))
        with self.state.lock:
            db = self.state.db
            try:
                if isinstance(rule, RepairRule):
                    candidate = RuleDb(
                        db.repairs + (rule,), db.suggestions, db.version
                    )
                else:
                    candidate = RuleDb(
                        db.repairs, db.suggestions + (rule,), db.version
                    )
            except ValidationError as exc:
                return self._error(400, str(exc))
            if self.state.rules_path is not None:
                candidate = save_rules(candidate, self.state.rules_path)
            else:
                candidate = RuleDb(
                    candidate.repairs, candidate.suggestions, candidate.version + 1
                )
            self.state.db = candidate
            version = candidate.version
        rid = rule.rule_id if isinstance(rule, RepairRule) else rule.suggestion_id
        self._json(201, {"saved": rid, "version": version})

    def _post_repair(self, rid: str):
        record = self.state.records.get(rid)
        if record is None:
            return self._error(404, f"no such record: {rid}")
        _, db = self._snapshot()
        searcher = make_searcher(
            self.state.config.search_url, self.state.config.search_allowlist
        )
        try:
            outcome = repair(record, db, searcher)
        except ValidationError as exc:
            return self._error(400, str(exc))
        if isinstance(outcome, Repaired):
            variants = [
                {
                    "solution_index": v.solution_index,
                    "patched_text": v.patched_text,
                    "diff": _unified_diff(record, v.patched_text, v.rule_id),
                }
                for v in outcome.variants
            ]
            return self._json(
                200,
                {
                    "outcome": "repaired",
                    "rule_id": outcome.rule_id,
                    "variants": variants,
                },
            )
        if isinstance(outcome, Suggested):
            return self._json(
                200,
                {
                    "outcome": "suggested",
                    "suggestion_id": outcome.suggestion_id,
                    "message": outcome.message,
                },
            )
        assert isinstance(outcome, SearchFallback)
        return self._json(
            200,
            {
                "outcome": "search",
                "query": outcome.query.query_string if outcome.query else None,
                "results": [
                    {"url": r.url, "title": r.title, "source_domain": r.source_domain}
                    for r in outcome.results
                ],
            },
        )


def build_server(
    corpus_path,
    rules_path=None,
    assignment_path=None,
    config: Config | None = None,
    port: int | None = None,
    ui_dir=None,
) -> ThreadingHTTPServer:
    """Construct the HTTP server without starting it (callers own the
    serve_forever loop); the state rides on the handler class."""
    state = load_state(corpus_path, rules_path, assignment_path, config, ui_dir)
    handler = type("BoundWorkbenchHandler", (WorkbenchHandler,), {"state": state})
    bind_port = port if port is not None else state.config.port
    server = ThreadingHTTPServer((BIND_HOST, bind_port), handler)
    server.state = state  # type: ignore[attr-defined]
    return server


def serve(
    corpus_path,
    rules_path=None,
    assignment_path=None,
    config: Config | None = None,
    port: int | None = None,
    ui_dir=None,
) -> None:
    server = build_server(
        corpus_path, rules_path, assignment_path, config, port, ui_dir
    )
    host, bound = server.server_address[:2]
    print(f"workbench listening on http://{host}:{bound}")
    try:
        server.serve_forever()
    finally:
        server.server_close()
