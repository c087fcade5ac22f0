"""How well do the rules cover the corpus, and do their fixes agree
with what developers actually shipped?

Three measurements:
  1. coverage: per rule, which clusters it fires in and how densely
  2. proportions: per cluster, the repaired / suggested / unknown mix
  3. equivalence: a generated patch judged against the real-world fix
"""
import dataclasses

from dockwright.corpus import BuildOutcome, BuildRecord
from dockwright.metrics import (
    patch_equivalence,
    repair_coverage,
    solution_proportions,
)
from dockwright.rules import Repaired, RuleDb, default_rules, repair


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


records = []
for i, pkg in enumerate(["python-pip", "curl", "wget", "git"]):
    records.append(failure(
        f"apt{i}",
        f"FROM ubuntu:latest\nRUN apt-get -y install {pkg}\n",
        f"E: Unable to locate package {pkg}\nreturned a non-zero code: 100",
    ))
for i in range(4):
    records.append(failure(
        f"npm{i}",
        "FROM node:14\nRUN npm run build\n",
        "npm ERR! code ELIFECYCLE\nnpm ERR! errno 1\nnpm ERR! Exit status 1",
    ))
# Hand-assigned labels stand in for a clustering run; any mapping of
# record id to cluster label works.
labels = {r.record_id: (0 if r.record_id.startswith("apt") else 1)
          for r in records}

db = default_rules()

# Coverage reports each rule against the cluster it was written for;
# tag the apt rule with its home cluster so that column is populated.
tagged = RuleDb(
    repairs=tuple(
        dataclasses.replace(r, parent_cluster=0) if r.rule_id == "5" else r
        for r in db.repairs
    ),
    suggestions=db.suggestions,
)
print("rule coverage (clusters each rule fires in):")
for row in repair_coverage(tagged, labels, records):
    print(f"  rule {row.rule_id}: {row.cluster_count} cluster(s), "
          f"home-cluster coverage {row.parent_coverage:.2f}, "
          f"average density {row.average_coverage:.2f}")

print("\ncluster outcome mix:")
for prop in solution_proportions(db, labels, records):
    print(f"  cluster {prop.cluster_id}: repaired {prop.repaired_frac:.2f}  "
          f"suggested {prop.suggested_frac:.2f}  "
          f"unknown {prop.unknown_frac:.2f}")

# Equivalence: generate a fix for one record, then compare it with two
# hypothetical developer commits.
broken = records[0]
outcome = repair(broken, db)
assert isinstance(outcome, Repaired)
generated = outcome.variants[0].patched_text

same_fix = "FROM ubuntu:18.04\n# pin the old base\nRUN apt-get -y install python-pip\n"
other_fix = "FROM debian:bullseye\nRUN apt-get -y install python3-pip\n"
print("\npatch equivalence:")
for name, dev in (("developer pinned same base", same_fix),
                  ("developer switched distro", other_fix)):
    verdict = patch_equivalence(broken.dockerfile_text, generated, dev)
    print(f"  {name}: {verdict.tag.value} ({verdict.detail})")
