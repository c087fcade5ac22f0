"""Classify build outcomes and ingest a JSONL corpus, rejects included.

A corpus line is one build attempt. Bad lines never poison the batch;
they land in a rejects report with the line number and reason.
"""
import json
import tempfile
from pathlib import Path

from dockwright.corpus import (
    classify_outcome,
    corpus_stats,
    ingest_corpus,
)

# outcome precedence: timeout, then daemon error, then the exit code
table = [
    (0, 42.0, False),       # clean build
    (100, 42.0, False),     # apt failed
    (1, 1800.0, False),     # hit the 30 minute wall
    (1, 42.0, True),        # daemon fell over mid-build
    (None, 42.0, False),    # engine never reported back
]
for exit_code, duration, daemon in table:
    outcome = classify_outcome(exit_code, duration, daemon)
    print(f"exit={str(exit_code):>4}  duration={duration:>7.1f}  "
          f"daemon={daemon!s:<5}  ->  {outcome.value}")

wire = {
    "id": "demo-1",
    "repo": "github.com/acme/api",
    "dockerfile_path": "Dockerfile",
    "dockerfile": "FROM ubuntu:latest\nRUN apt-get install -y python-pip\n",
    "stdout": "",
    "stderr": "E: Unable to locate package python-pip",
    "outcome": "failure",
    "duration_s": 41.2,
    "captured_at": "2026-08-01T09:30:00Z",
    "meta": {"exit_code": "100"},
}

with tempfile.TemporaryDirectory() as scratch:
    corpus = Path(scratch) / "builds.jsonl"
    corpus.write_text(
        json.dumps(wire) + "\n"
        + "this line is not json\n"
        + json.dumps(dict(wire, id="demo-2", outcome="success", stderr=""))
        + "\n",
        encoding="utf-8",
    )
    result = ingest_corpus(corpus)

print(f"\naccepted {len(result.records)} records")
for reject in result.rejects:
    print(f"rejected line {reject.line_no}: {reject.reason}")

stats = corpus_stats(result.records)
print(f"breakage rate {stats.breakage_rate:.2%} "
      f"({stats.failures} of {stats.total} builds)")
