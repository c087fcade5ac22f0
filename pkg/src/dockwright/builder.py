"""In-context Dockerfile builds against a local container engine.

Optional stage: every downstream component runs from corpus files, so
nothing here is required for triage. When used, each job clones (or
reuses) a repository, shells out to `<engine> build -f <dockerfile>
<context>`, captures both streams, and classifies the outcome exactly
like replayed corpus data. Per-job problems become records; only an
unreachable engine aborts a batch, and it does so before any job runs.
"""
from __future__ import annotations

import json
import re
import subprocess
import tempfile
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .config import Config
from .corpus import BuildOutcome, BuildRecord, classify_outcome, record_to_wire
from .errors import ConfigError, ValidationError

_URL_PREFIXES = ("http://", "https://", "git://", "ssh://", "git@")


@dataclass(frozen=True)
class BuildJob:
    repo_ref: str
    dockerfile_path: str = "Dockerfile"
    context_dir: str = "."
    timeout_limit: float = 1800.0

    def __post_init__(self):
        if self.timeout_limit <= 0:
            raise ValidationError("timeout_limit must be positive")
        if not self.repo_ref:
            raise ValidationError("repo_ref required")


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def probe_engine(config: Config | None = None) -> str:
    """One engine health check per batch; unreachable engine is fatal."""
    config = config or Config.load()
    cmd = [config.engine, "version"]
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=30)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise ConfigError(f"container engine {config.engine!r} unreachable: {exc}")
    if proc.returncode != 0:
        raise ConfigError(
            f"container engine {config.engine!r} probe failed: "
            f"{proc.stderr.strip() or proc.stdout.strip()}"
        )
    return proc.stdout.strip().splitlines()[0] if proc.stdout.strip() else "unknown"


def _clone(url: str, dest: Path) -> subprocess.CompletedProcess:
    return subprocess.run(
        ["git", "clone", "--depth", "1", url, str(dest)],
        capture_output=True,
        text=True,
        timeout=600,
    )


def _daemon_error(text: str, patterns) -> bool:
    return any(re.search(p, text, re.IGNORECASE) for p in patterns)


def _trivial(text: str, kinds) -> bool:
    return any(re.search(rf"(?i)\b{kind} failed\b", text) for kind in kinds)


def run_build(
    job: BuildJob, config: Config | None = None, record_id: str | None = None
) -> BuildRecord:
    """Execute one build; never raises for job-level problems."""
    config = config or Config.load()
    rid = record_id or f"build-{uuid.uuid4().hex[:12]}"
    with tempfile.TemporaryDirectory(prefix="dockwright-") as scratch:
        if job.repo_ref.startswith(_URL_PREFIXES):
            repo_root = Path(scratch) / "repo"
            cloned = _clone(job.repo_ref, repo_root)
            if cloned.returncode != 0:
                return BuildRecord(
                    record_id=rid,
                    repo_ref=job.repo_ref,
                    dockerfile_path=job.dockerfile_path,
                    dockerfile_text="",
                    stdout_log=cloned.stdout,
                    stderr_log=cloned.stderr,
                    outcome=BuildOutcome.UNDETERMINED,
                    duration=0.0,
                    captured_at=_now(),
                    meta={"clone_error": "true", "repo": job.repo_ref},
                )
        else:
            repo_root = Path(job.repo_ref)
        context = (repo_root / job.context_dir).resolve()
        dockerfile = (repo_root / job.dockerfile_path).resolve()
        try:
            dockerfile_text = dockerfile.read_text(encoding="utf-8", errors="replace")
        except OSError:
            dockerfile_text = ""
        cmd = [config.engine, *config.engine_flags, "build", "-f", str(dockerfile), str(context)]
        started = time.monotonic()
        timed_out = False
        try:
            proc = subprocess.run(
                cmd, capture_output=True, text=True, timeout=job.timeout_limit
            )
            duration = time.monotonic() - started
            stdout, stderr = proc.stdout, proc.stderr
            exit_code: int | None = proc.returncode
        except subprocess.TimeoutExpired as exc:
            timed_out = True
            duration = job.timeout_limit
            stdout = _decode(exc.stdout)
            stderr = _decode(exc.stderr)
            exit_code = None
        except OSError as exc:
            duration = time.monotonic() - started
            stdout, stderr = "", f"failed to launch engine: {exc}"
            exit_code = None

    combined = stdout + "\n" + stderr
    daemon = not timed_out and _daemon_error(combined, config.daemon_error_patterns)
    outcome = classify_outcome(
        exit_code, duration, daemon_error=daemon, timeout_limit=job.timeout_limit
    )
    meta = {"repo": job.repo_ref}
    if exit_code is not None:
        meta["exit_code"] = str(exit_code)
    if daemon:
        meta["daemon_error"] = "true"
    if outcome == BuildOutcome.FAILURE and _trivial(combined, config.trivial_kinds):
        meta["trivial"] = "true"
    return BuildRecord(
        record_id=rid,
        repo_ref=job.repo_ref,
        dockerfile_path=job.dockerfile_path,
        dockerfile_text=dockerfile_text,
        stdout_log=stdout,
        stderr_log=stderr,
        outcome=outcome,
        duration=duration,
        captured_at=_now(),
        meta=meta,
    )


def _decode(stream) -> str:
    if stream is None:
        return ""
    if isinstance(stream, bytes):
        return stream.decode("utf-8", errors="replace")
    return stream


def run_batch(
    jobs,
    parallelism: int | None = None,
    config: Config | None = None,
    corpus_path=None,
) -> list[BuildRecord]:
    """Run jobs with bounded concurrency; results come back in input
    order while finished records flush to corpus_path as they complete."""
    config = config or Config.load()
    workers = parallelism if parallelism is not None else config.parallelism
    if workers < 1:
        raise ValidationError("parallelism must be >= 1")
    jobs = list(jobs)
    if not jobs:
        return []
    probe_engine(config)
    results: list[BuildRecord | None] = [None] * len(jobs)
    write_lock = threading.Lock()
    sink = open(corpus_path, "a", encoding="utf-8") if corpus_path else None

    def work(i: int, job: BuildJob) -> None:
        record = run_build(job, config, record_id=f"job-{i:04d}")
        results[i] = record
        if sink is not None:
            line = json.dumps(record_to_wire(record), sort_keys=True)
            with write_lock:
                sink.write(line + "\n")
                sink.flush()

    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(work, i, job) for i, job in enumerate(jobs)]
            for fut in futures:
                fut.result()
    finally:
        if sink is not None:
            sink.close()
    return results  # type: ignore[return-value]
