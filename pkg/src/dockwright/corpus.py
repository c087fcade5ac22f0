"""Build-record data model, corpus ingestion/persistence, outcome
classification, and corpus-level statistics.

Corpus files are UTF-8 JSON Lines. Wire field names are fixed: id,
repo, dockerfile_path, dockerfile, stdout, stderr, outcome, duration_s,
captured_at, meta. Logs are stored exactly as captured; normalization
happens downstream.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

DEFAULT_TIMEOUT_LIMIT = 1800.0  # seconds


class BuildOutcome(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    TIMEOUT = "timeout"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class BuildRecord:
    """One Dockerfile build attempt; immutable after construction."""

    record_id: str
    repo_ref: str
    dockerfile_path: str
    dockerfile_text: str
    stdout_log: str
    stderr_log: str
    outcome: BuildOutcome
    duration: float
    captured_at: str
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CorpusStats:
    total: int
    successes: int
    failures: int
    timeouts: int
    undetermined: int
    breakage_rate: float


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    reason: str


@dataclass(frozen=True)
class IngestResult:
    records: tuple[BuildRecord, ...]
    rejects: tuple[RejectedLine, ...]


class DuplicateRecordIdError(ValidationError):
    pass


def classify_outcome(
    exit_code: int | None,
    duration: float,
    daemon_error: bool,
    timeout_limit: float = DEFAULT_TIMEOUT_LIMIT,
) -> BuildOutcome:
    """Classify a build by precedence: timeout, daemon error, exit code.

    An absent exit code without a timeout or daemon error cannot
    establish failure and is Undetermined.
    """
    if timeout_limit <= 0:
        raise ValidationError("timeout_limit must be positive")
    if duration >= timeout_limit:
        return BuildOutcome.TIMEOUT
    if daemon_error:
        return BuildOutcome.UNDETERMINED
    if exit_code == 0:
        return BuildOutcome.SUCCESS
    if exit_code is None:
        return BuildOutcome.UNDETERMINED
    return BuildOutcome.FAILURE


_WIRE_FIELDS = (
    "id", "repo", "dockerfile_path", "dockerfile", "stdout", "stderr",
    "outcome", "duration_s", "captured_at", "meta",
)
_STRING_FIELDS = (
    "id", "repo", "dockerfile_path", "dockerfile", "stdout", "stderr",
    "captured_at",
)
_OUTCOMES = {o.value for o in BuildOutcome}


def _record_from_wire(obj: dict) -> BuildRecord:
    missing = [k for k in _WIRE_FIELDS if k not in obj]
    if missing:
        raise ValidationError(f"missing fields: {', '.join(missing)}")
    for key in _STRING_FIELDS:
        if not isinstance(obj[key], str):
            raise ValidationError(f"field {key!r} must be a string")
    if obj["outcome"] not in _OUTCOMES:
        raise ValidationError(
            f"outcome must be one of {sorted(_OUTCOMES)}, got {obj['outcome']!r}"
        )
    duration = obj["duration_s"]
    if isinstance(duration, bool) or not isinstance(duration, (int, float)):
        raise ValidationError("duration_s must be a number")
    if duration < 0:
        raise ValidationError("duration_s must be non-negative")
    meta = obj["meta"]
    if not isinstance(meta, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in meta.items()
    ):
        raise ValidationError("meta must be a string-to-string map")
    outcome = BuildOutcome(obj["outcome"])
    if not obj["dockerfile"] and outcome is not BuildOutcome.UNDETERMINED:
        raise ValidationError("dockerfile must be non-empty unless undetermined")
    if not obj["id"]:
        raise ValidationError("id must be non-empty")
    return BuildRecord(
        record_id=obj["id"],
        repo_ref=obj["repo"],
        dockerfile_path=obj["dockerfile_path"],
        dockerfile_text=obj["dockerfile"],
        stdout_log=obj["stdout"],
        stderr_log=obj["stderr"],
        outcome=outcome,
        duration=float(duration),
        captured_at=obj["captured_at"],
        meta=dict(meta),
    )


def record_to_wire(record: BuildRecord) -> dict:
    return {
        "id": record.record_id,
        "repo": record.repo_ref,
        "dockerfile_path": record.dockerfile_path,
        "dockerfile": record.dockerfile_text,
        "stdout": record.stdout_log,
        "stderr": record.stderr_log,
        "outcome": record.outcome.value,
        "duration_s": record.duration,
        "captured_at": record.captured_at,
        "meta": dict(record.meta),
    }


def ingest_corpus(path: str | Path) -> IngestResult:
    """Read a JSONL corpus; malformed lines go to the rejects report.

    Raises OSError for unreadable files and DuplicateRecordIdError when
    two well-formed lines share an id (naming both line numbers).
    """
    text = Path(path).read_text(encoding="utf-8")
    records: list[BuildRecord] = []
    rejects: list[RejectedLine] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            rejects.append(RejectedLine(line_no, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            rejects.append(RejectedLine(line_no, "line is not an object"))
            continue
        try:
            record = _record_from_wire(obj)
        except ValidationError as exc:
            rejects.append(RejectedLine(line_no, str(exc)))
            continue
        if record.record_id in seen:
            raise DuplicateRecordIdError(
                f"duplicate record id {record.record_id!r} "
                f"on lines {seen[record.record_id]} and {line_no}"
            )
        seen[record.record_id] = line_no
        records.append(record)
    return IngestResult(tuple(records), tuple(rejects))


def persist_corpus(records, path: str | Path) -> None:
    """Write records as JSONL; ingest(persist(rs)) round-trips field-equal."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_wire(record), sort_keys=True))
            fh.write("\n")


def corpus_stats(records) -> CorpusStats:
    counts = {o: 0 for o in BuildOutcome}
    total = 0
    for record in records:
        counts[record.outcome] += 1
        total += 1
    rate = counts[BuildOutcome.FAILURE] / total if total else 0.0
    return CorpusStats(
        total=total,
        successes=counts[BuildOutcome.SUCCESS],
        failures=counts[BuildOutcome.FAILURE],
        timeouts=counts[BuildOutcome.TIMEOUT],
        undetermined=counts[BuildOutcome.UNDETERMINED],
        breakage_rate=rate,
    )
