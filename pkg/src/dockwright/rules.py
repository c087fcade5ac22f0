"""Error-signature rules: match build failures, patch Dockerfiles.

A rule pairs a regex over the Dockerfile text with a regex over the
normalized build log. Capture groups across the two documents bind to
numbered variables $0..$n (static groups first), which edit scripts and
suggestion messages interpolate. Repairs produce patched Dockerfile
variants via span edits; suggestions produce advisory messages; records
matching neither fall back to web search.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field

from .dockerfile import DockerfileAst, SourceSpan, parse, splice
from .errors import ValidationError
from .logpipe import normalize

_TEMPLATE_VAR = re.compile(r"\$(\d+)")
_KIND_SELECTOR = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


class RuleLoadError(ValidationError):
    """Rule file rejected; the message names the offending rule id."""


class RuleApplicationError(ValidationError):
    """An edit script referenced a missing binding or produced
    overlapping edits."""


@dataclass(frozen=True)
class Pattern:
    """Conjunction of an optional Dockerfile regex and an optional
    normalized-log regex; at least one must be present."""

    static_re: str | None = None
    dynamic_re: str | None = None

    def __post_init__(self):
        if self.static_re is None and self.dynamic_re is None:
            raise ValidationError("pattern needs static_re or dynamic_re")
        object.__setattr__(
            self, "_static", re.compile(self.static_re) if self.static_re else None
        )
        object.__setattr__(
            self, "_dynamic", re.compile(self.dynamic_re) if self.dynamic_re else None
        )

    @property
    def static_groups(self) -> int:
        return self._static.groups if self._static else 0

    @property
    def dynamic_groups(self) -> int:
        return self._dynamic.groups if self._dynamic else 0


@dataclass(frozen=True)
class Capture:
    text: str
    span: SourceSpan
    document: str  # "static" or "dynamic"


@dataclass(frozen=True)
class Binding:
    """Bound capture variables plus the overall match spans."""

    captures: dict[int, Capture]
    static_span: SourceSpan | None = None
    dynamic_span: SourceSpan | None = None

    def __contains__(self, i: int) -> bool:
        return i in self.captures

    def __getitem__(self, i: int) -> Capture:
        return self.captures[i]

    def get(self, i: int):
        return self.captures.get(i)


@dataclass(frozen=True)
class EditOp:
    """One edit: replace/remove a bound span, or insert text after the
    instruction holding a binding (or the first instruction of a kind)."""

    op: str  # replace | insert_after | remove
    target: str  # "$i", or an instruction kind for insert_after
    text: str | None = None

    def __post_init__(self):
        if self.op not in ("replace", "insert_after", "remove"):
            raise ValidationError(f"unknown op {self.op!r}")
        if self.op in ("replace", "insert_after") and self.text is None:
            raise ValidationError(f"op {self.op} requires text")
        if not _is_var(self.target):
            if self.op != "insert_after" or not _KIND_SELECTOR.fullmatch(self.target):
                raise ValidationError(f"bad target {self.target!r} for op {self.op}")


def _is_var(target: str) -> bool:
    return bool(re.fullmatch(r"\$\d+", target))


@dataclass(frozen=True)
class RepairRule:
    rule_id: str
    pattern: Pattern
    solutions: tuple[tuple[EditOp, ...], ...]
    source_url: str | None = None
    notes: str = ""
    parent_cluster: int | None = None
    fixture: tuple[str, str] | None = None  # (dockerfile, raw log)

    def __post_init__(self):
        if not self.solutions or any(len(s) == 0 for s in self.solutions):
            raise ValidationError(f"rule {self.rule_id}: solutions must be non-empty")


@dataclass(frozen=True)
class Suggestion:
    suggestion_id: str
    pattern: Pattern
    message: str
    target_kind: str | None = None

    def __post_init__(self):
        if not self.message:
            raise ValidationError(f"suggestion {self.suggestion_id}: empty message")


@dataclass(frozen=True)
class RuleDb:
    repairs: tuple[RepairRule, ...] = ()
    suggestions: tuple[Suggestion, ...] = ()
    version: int = 1

    def __post_init__(self):
        seen = set()
        for rid in [r.rule_id for r in self.repairs] + [
            s.suggestion_id for s in self.suggestions
        ]:
            if rid in seen:
                raise ValidationError(f"duplicate rule id {rid!r}")
            seen.add(rid)

    def get_repair(self, rule_id: str) -> RepairRule | None:
        for r in self.repairs:
            if r.rule_id == rule_id:
                return r
        return None

    def get_suggestion(self, suggestion_id: str) -> Suggestion | None:
        for s in self.suggestions:
            if s.suggestion_id == suggestion_id:
                return s
        return None


def match_rule(pattern: Pattern, dockerfile_text: str, log_text: str) -> Binding | None:
    """Match both sub-patterns (first occurrence each); None unless every
    present sub-pattern matches. log_text must already be normalized."""
    captures: dict[int, Capture] = {}
    static_span = dynamic_span = None
    if pattern._static is not None:
        m = pattern._static.search(dockerfile_text)
        if m is None:
            return None
        static_span = SourceSpan(*m.span(0))
        for g in range(1, pattern.static_groups + 1):
            if m.group(g) is not None:
                captures[g - 1] = Capture(m.group(g), SourceSpan(*m.span(g)), "static")
    if pattern._dynamic is not None:
        m = pattern._dynamic.search(log_text)
        if m is None:
            return None
        dynamic_span = SourceSpan(*m.span(0))
        base = pattern.static_groups
        for g in range(1, pattern.dynamic_groups + 1):
            if m.group(g) is not None:
                captures[base + g - 1] = Capture(
                    m.group(g), SourceSpan(*m.span(g)), "dynamic"
                )
    return Binding(captures, static_span, dynamic_span)


def interpolate(template: str, binding: Binding) -> str:
    """Substitute $i variables with their captured text."""

    def sub(m: re.Match) -> str:
        i = int(m.group(1))
        cap = binding.get(i)
        if cap is None:
            raise RuleApplicationError(f"template references unbound ${i}")
        return cap.text

    return _TEMPLATE_VAR.sub(sub, template)


def _static_capture(binding: Binding, target: str, op: str) -> Capture:
    i = int(target[1:])
    cap = binding.get(i)
    if cap is None:
        raise RuleApplicationError(f"op {op} references unbound ${i}")
    if cap.document != "static":
        raise RuleApplicationError(
            f"op {op} target ${i} must bind in the Dockerfile, not the log"
        )
    return cap


def compile_ops(
    ast: DockerfileAst, solution: tuple[EditOp, ...], binding: Binding
) -> list[tuple[SourceSpan, str]]:
    """Lower a solution's ops to concrete span edits on one document."""
    edits: list[tuple[SourceSpan, str]] = []
    for op in solution:
        if op.op == "replace":
            cap = _static_capture(binding, op.target, "replace")
            edits.append((cap.span, interpolate(op.text, binding)))
        elif op.op == "remove":
            cap = _static_capture(binding, op.target, "remove")
            edits.append((cap.span, ""))
        else:  # insert_after
            if _is_var(op.target):
                cap = _static_capture(binding, op.target, "insert_after")
                instr = ast.instruction_at(cap.span.start)
                if instr is None:
                    raise RuleApplicationError(
                        f"binding {op.target} falls outside any instruction"
                    )
            else:
                instr = ast.first_of_kind(op.target.upper())
                if instr is None:
                    raise RuleApplicationError(
                        f"no {op.target.upper()} instruction to insert after"
                    )
            pos = instr.span.end
            edits.append((SourceSpan(pos, pos), interpolate(op.text, binding)))
    return edits


def apply_solution(dockerfile_text: str, solution, binding: Binding) -> str:
    """Apply one edit script; returns the patched Dockerfile text."""
    ast = parse(dockerfile_text)
    edits = compile_ops(ast, tuple(solution), binding)
    try:
        return splice(dockerfile_text, edits)
    except ValidationError as exc:
        raise RuleApplicationError(f"edit script failed: {exc}") from exc


# --- repair outcomes ---


@dataclass(frozen=True)
class RepairVariant:
    rule_id: str
    solution_index: int
    patched_text: str


@dataclass(frozen=True)
class Repaired:
    record_id: str
    rule_id: str
    variants: tuple[RepairVariant, ...]


@dataclass(frozen=True)
class Suggested:
    record_id: str
    suggestion_id: str
    message: str


@dataclass(frozen=True)
class SearchFallback:
    record_id: str
    query: object | None
    results: tuple = ()


RepairOutcome = Repaired | Suggested | SearchFallback


def record_log_text(record) -> str:
    """The normalized log a record is matched against: stderr, falling
    back to stdout when stderr is blank."""
    raw = record.stderr_log if record.stderr_log.strip() else record.stdout_log
    return normalize(raw)


def repair(record, db: RuleDb, searcher=None) -> RepairOutcome:
    """Triage one failing record: first matching repair rule wins, then
    the first matching suggestion, then a search fallback.

    searcher, when given, is a callable taking a SearchQuery and
    returning ranked results (see search.search_top5); without one the
    fallback carries the query and no results.
    """
    from .corpus import BuildOutcome

    if record.outcome != BuildOutcome.FAILURE:
        raise ValidationError(
            f"record {record.record_id} is {record.outcome.value}, not failure"
        )
    log_text = record_log_text(record)
    for rule in db.repairs:
        binding = match_rule(rule.pattern, record.dockerfile_text, log_text)
        if binding is not None:
            variants = tuple(
                RepairVariant(rule.rule_id, i, apply_solution(
                    record.dockerfile_text, solution, binding))
                for i, solution in enumerate(rule.solutions)
            )
            return Repaired(record.record_id, rule.rule_id, variants)
    for suggestion in db.suggestions:
        binding = match_rule(suggestion.pattern, record.dockerfile_text, log_text)
        if binding is not None:
            return Suggested(
                record.record_id,
                suggestion.suggestion_id,
                interpolate(suggestion.message, binding),
            )
    from .search import build_query

    try:
        query = build_query(record)
    except ValidationError:
        return SearchFallback(record.record_id, None, ())
    results = tuple(searcher(query))[:5] if searcher is not None else ()
    return SearchFallback(record.record_id, query, results)


@dataclass(frozen=True)
class DryRunReport:
    matched_ids: tuple[str, ...]
    fraction: float | None  # None when no failing records were evaluated
    total: int


def dry_run(rule, records) -> DryRunReport:
    """Evaluate a rule or suggestion over failing records without
    applying anything."""
    from .corpus import BuildOutcome

    matched = []
    total = 0
    for record in records:
        if record.outcome != BuildOutcome.FAILURE:
            continue
        total += 1
        if match_rule(rule.pattern, record.dockerfile_text, record_log_text(record)):
            matched.append(record.record_id)
    fraction = len(matched) / total if total else None
    return DryRunReport(tuple(matched), fraction, total)


# --- persistence ---


def _pattern_from_wire(obj: dict, rid: str) -> Pattern:
    try:
        return Pattern(static_re=obj.get("static_re"), dynamic_re=obj.get("dynamic_re"))
    except re.error as exc:
        raise RuleLoadError(f"rule {rid!r}: invalid regex: {exc}") from exc
    except ValidationError as exc:
        raise RuleLoadError(f"rule {rid!r}: {exc}") from exc


def _op_from_wire(obj: dict, rid: str) -> EditOp:
    try:
        return EditOp(
            op=obj.get("op", ""), target=obj.get("target", ""), text=obj.get("text")
        )
    except ValidationError as exc:
        raise RuleLoadError(f"rule {rid!r}: {exc}") from exc


def _repair_from_wire(obj: dict) -> RepairRule:
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise RuleLoadError("repair entry missing string id")
    pattern = _pattern_from_wire(obj, rid)
    solutions = obj.get("solutions")
    if not isinstance(solutions, list) or not solutions:
        raise RuleLoadError(f"rule {rid!r}: solutions must be a non-empty array")
    for script in solutions:
        if not isinstance(script, list) or not all(
            isinstance(op, dict) for op in script
        ):
            raise RuleLoadError(
                f"rule {rid!r}: each solution must be an array of op objects"
            )
    parsed = tuple(
        tuple(_op_from_wire(op, rid) for op in script) for script in solutions
    )
    fixture = None
    fx = obj.get("fixture")
    if fx is not None:
        if (
            not isinstance(fx, dict)
            or not isinstance(fx.get("dockerfile"), str)
            or not isinstance(fx.get("log"), str)
        ):
            raise RuleLoadError(
                f"rule {rid!r}: fixture needs dockerfile and log strings"
            )
        fixture = (fx["dockerfile"], fx["log"])
    try:
        rule = RepairRule(
            rule_id=rid,
            pattern=pattern,
            solutions=parsed,
            source_url=obj.get("src"),
            notes=obj.get("notes", ""),
            parent_cluster=obj.get("parent_cluster"),
            fixture=fixture,
        )
    except ValidationError as exc:
        raise RuleLoadError(str(exc)) from exc
    _check_fixture(rule)
    return rule


def _check_fixture(rule: RepairRule) -> None:
    if rule.fixture is None:
        return
    dockerfile_text, raw_log = rule.fixture
    binding = match_rule(rule.pattern, dockerfile_text, normalize(raw_log))
    if binding is None:
        raise RuleLoadError(f"rule {rule.rule_id!r}: fixture does not match")
    for i, solution in enumerate(rule.solutions):
        try:
            apply_solution(dockerfile_text, solution, binding)
        except ValidationError as exc:
            raise RuleLoadError(
                f"rule {rule.rule_id!r}: solution {i} fails on fixture: {exc}"
            ) from exc


def _suggestion_from_wire(obj: dict) -> Suggestion:
    sid = obj.get("id")
    if not isinstance(sid, str) or not sid:
        raise RuleLoadError("suggestion entry missing string id")
    message = obj.get("message")
    if not isinstance(message, str) or not message:
        raise RuleLoadError(f"suggestion {sid!r}: message required")
    return Suggestion(
        suggestion_id=sid,
        pattern=_pattern_from_wire(obj, sid),
        message=message,
        target_kind=obj.get("target_kind"),
    )


def rule_from_wire(kind: str, obj: dict):
    """Parse one wire-format entry as a repair or a suggestion."""
    if kind == "repair":
        return _repair_from_wire(obj)
    if kind == "suggestion":
        return _suggestion_from_wire(obj)
    raise RuleLoadError(f"unknown rule kind {kind!r}")


def db_from_wire(obj: dict) -> RuleDb:
    if not isinstance(obj, dict):
        raise RuleLoadError("rule file must hold a JSON object")
    for key in ("repairs", "suggestions"):
        entries = obj.get(key, [])
        if not isinstance(entries, list) or not all(
            isinstance(e, dict) for e in entries
        ):
            raise RuleLoadError(f"{key} must be an array of objects")
    repairs = tuple(_repair_from_wire(r) for r in obj.get("repairs", []))
    suggestions = tuple(_suggestion_from_wire(s) for s in obj.get("suggestions", []))
    version = obj.get("version", 1)
    if not isinstance(version, int) or version < 1:
        raise RuleLoadError("version must be a positive integer")
    try:
        return RuleDb(repairs, suggestions, version)
    except ValidationError as exc:
        raise RuleLoadError(str(exc)) from exc


def db_to_wire(db: RuleDb) -> dict:
    repairs = []
    for r in db.repairs:
        entry = {
            "id": r.rule_id,
            "static_re": r.pattern.static_re,
            "dynamic_re": r.pattern.dynamic_re,
            "solutions": [
                [
                    {"op": op.op, "target": op.target, **(
                        {"text": op.text} if op.text is not None else {})}
                    for op in script
                ]
                for script in r.solutions
            ],
            "src": r.source_url,
            "notes": r.notes,
        }
        if r.parent_cluster is not None:
            entry["parent_cluster"] = r.parent_cluster
        if r.fixture is not None:
            entry["fixture"] = {"dockerfile": r.fixture[0], "log": r.fixture[1]}
        repairs.append(entry)
    suggestions = []
    for s in db.suggestions:
        entry = {
            "id": s.suggestion_id,
            "static_re": s.pattern.static_re,
            "dynamic_re": s.pattern.dynamic_re,
            "message": s.message,
        }
        if s.target_kind is not None:
            entry["target_kind"] = s.target_kind
        suggestions.append(entry)
    return {"version": db.version, "repairs": repairs, "suggestions": suggestions}


def load_rules(path) -> RuleDb:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RuleLoadError(f"rule file is not valid JSON: {exc}") from exc
    return db_from_wire(obj)


def save_rules(db: RuleDb, path) -> RuleDb:
    """Persist atomically with the version bumped; returns the bumped db."""
    bumped = RuleDb(db.repairs, db.suggestions, db.version + 1)
    payload = json.dumps(db_to_wire(bumped), indent=2) + "\n"
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    return bumped


def default_rules() -> RuleDb:
    """The shipped seed database."""
    from importlib.resources import files

    text = files("dockwright").joinpath("data/default_rules.json").read_text("utf-8")
    return db_from_wire(json.loads(text))
