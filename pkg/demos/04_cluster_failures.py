"""Cluster a small corpus of build failures into recurring families.

Twenty failures from two causes (apt packages that do not exist, ruby
version mismatches) plus one unrelated linker crash. The two families
should come out as two clusters; the oddball should land in noise.
"""
from collections import Counter

from dockwright.cluster import ClusteringParams
from dockwright.config import Config
from dockwright.corpus import BuildOutcome, BuildRecord
from dockwright.pipeline import cluster_corpus, top_terms


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
for i, pkg in enumerate(
    ["python-pip", "curl", "wget", "git", "vim",
     "nano", "tmux", "htop", "jq", "zip"]
):
    records.append(failure(
        f"apt{i}",
        f"FROM ubuntu:latest\nRUN apt-get update && apt-get -y install {pkg}\n",
        f"E: Unable to locate package {pkg}\n"
        f"The command '/bin/sh -c apt-get -y install {pkg}' "
        f"returned a non-zero code: 100",
    ))
for i in range(10):
    cur, want = f"2.6.{i % 5}", f"2.6.{5 + i % 2}"
    records.append(failure(
        f"ruby{i}",
        f"FROM ruby:{cur}\nRUN bundle install\n",
        f"rake aborted!\n"
        f"Your Ruby version is {cur}, but your Gemfile specified {want}\n"
        f"run bundle install to continue",
    ))
records.append(failure(
    "odd0",
    "FROM alpine:3.12\nRUN ./configure && make\n",
    "checking whether the C compiler works... yes\n"
    "gcc -O2 -pipe -c vendor/quirk.c\n"
    "collect2: ld terminated with signal 9 [Killed]",
))

config = Config()
clustering = cluster_corpus(records, config, ClusteringParams(3, 3))
labels = clustering.labels_by_id

print("label counts:", dict(Counter(labels.values())))
for cid in sorted(set(labels.values()) - {-1}):
    members = clustering.cluster_members(cid)
    by_id = {r.record_id: r for r in records}
    terms = top_terms([by_id[m] for m in members])
    stability = clustering.assignment.stabilities[cid]
    print(f"\ncluster {cid}: {len(members)} members, stability {stability:.2f}")
    print("  members:", " ".join(members))
    print("  top terms:", ", ".join(terms))
noise = [rid for rid, lab in labels.items() if lab == -1]
print("\nnoise:", " ".join(noise) or "(none)")
assert noise == ["odd0"]

# Hyperparameter sweep: try the whole default grid, keep the setting
# that clusters the most records (requiring at least two clusters).
swept = cluster_corpus(records, config, use_grid=True)
report = swept.report
best = report.best_params
print(f"\ngrid search over {len(report.evaluated)} configurations")
print(f"best: min_cluster_size={best.min_cluster_size} "
      f"min_samples={best.min_samples}")
frac = report.evaluated[report.best][1]
print(f"clustered fraction at best: {frac:.3f}")
