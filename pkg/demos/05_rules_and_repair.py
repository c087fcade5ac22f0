"""Rule-driven repair: matched rules rewrite the Dockerfile, weaker
matches produce advice, and anything unmatched becomes a search query.
"""
import difflib

from dockwright.corpus import BuildOutcome, BuildRecord
from dockwright.rules import (
    Repaired,
    SearchFallback,
    Suggested,
    default_rules,
    repair,
)


def failure(rid, dockerfile, stderr):
    return BuildRecord(
        record_id=rid,
        repo_ref=f"github.com/demo/{rid}",
        dockerfile_path="Dockerfile",
        dockerfile_text=dockerfile,
        stdout_log="",
        stderr_log=stderr,
        outcome=BuildOutcome.FAILURE,
        duration=42.0,
        captured_at="2026-08-01T00:00:00Z",
        meta={},
    )


db = default_rules()
print(f"shipped rules: {len(db.repairs)} repair, {len(db.suggestions)} suggestion")

# Case 1: a known, fully mechanized failure. ubuntu:latest dropped the
# python-pip package, so the rule pins an older base or bootstraps pip.
apt = failure(
    "apt0",
    "FROM ubuntu:latest\nRUN apt-get update && apt-get -y install python-pip\n",
    "E: Unable to locate package python-pip\n"
    "The command '/bin/sh -c apt-get -y install python-pip' "
    "returned a non-zero code: 100",
)
outcome = repair(apt, db)
assert isinstance(outcome, Repaired)
print(f"\n[{apt.record_id}] rule {outcome.rule_id} fired, "
      f"{len(outcome.variants)} candidate fixes")
for variant in outcome.variants:
    diff = difflib.unified_diff(
        apt.dockerfile_text.splitlines(keepends=True),
        variant.patched_text.splitlines(keepends=True),
        fromfile="Dockerfile",
        tofile=f"Dockerfile.fix{variant.solution_index + 1}",
    )
    print("\n" + "".join(diff), end="")

# Case 2: the log is recognized but no safe rewrite exists, so the
# outcome is advice instead of a patch.
npm = failure(
    "npm0",
    "FROM node:14\nCOPY . /app\nRUN npm run build\n",
    "npm ERR! code ELIFECYCLE\nnpm ERR! errno 1\n"
    "npm ERR! webapp@1.0.0 build: `vite build`\nnpm ERR! Exit status 1",
)
outcome = repair(npm, db)
assert isinstance(outcome, Suggested)
print(f"\n[{npm.record_id}] suggestion {outcome.suggestion_id}: "
      f"{outcome.message}")

# Case 3: nothing matches. The fallback distills the log tail into a
# query for a web search backend (none configured here).
mystery = failure(
    "mys0",
    "FROM alpine:3.12\nRUN ./configure && make\n",
    "gcc -O2 -pipe -c vendor/quirk.c\n"
    "collect2: ld terminated with signal 9 [Killed]",
)
outcome = repair(mystery, db)
assert isinstance(outcome, SearchFallback)
print(f"\n[{mystery.record_id}] no rule matched; search query: "
      f"{outcome.query.query_string!r}")
