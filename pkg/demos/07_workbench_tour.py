"""Drive the triage workbench over plain HTTP.

Starts the server on an ephemeral port against a synthetic corpus,
walks the read endpoints, dry-runs a draft rule against a cluster,
saves it, and asks for a repair that the new rule now handles.
"""
import json
import tempfile
import threading
import urllib.request
from pathlib import Path

from dockwright.config import Config
from dockwright.corpus import BuildOutcome, BuildRecord, persist_corpus
from dockwright.workbench import build_server


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


def call(base, method, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(base + path, data=data, method=method)
    if data is not None:
        req.add_header("Content-Type", "application/json")
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


records = []
for i in range(4):
    records.append(failure(
        f"pg{i}",
        f"FROM postgres:1{i}\nRUN localedef -i en_US -f UTF-8 en_US.UTF-8\n",
        "initdb: error: invalid locale settings; check LANG and LC_ALL "
        f"environment variables (attempt {i})",
    ))
records.append(failure(
    "misc0",
    "FROM scratch\nCOPY app /app\n",
    "COPY failed: file not found in build context",
))

with tempfile.TemporaryDirectory() as tmp:
    corpus = Path(tmp) / "corpus.jsonl"
    persist_corpus(records, corpus)

    config = Config(min_cluster_size=2, min_samples=1)
    server = build_server(corpus, rules_path=Path(tmp) / "rules.json",
                          config=config, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    print("workbench listening on", base)

    try:
        overview = call(base, "GET", "/clusters")
        print(f"\nclusters: {len(overview['clusters'])}, "
              f"noise {overview['noise']}, total {overview['total']}")
        for cluster in overview["clusters"]:
            print(f"  cluster {cluster['cluster_id']}: size {cluster['size']}, "
                  f"top terms {', '.join(cluster['top_terms'][:3])}")

        cid = overview["clusters"][0]["cluster_id"]
        detail = call(base, "GET", f"/clusters/{cid}")
        member = detail["members"][0]["record_id"]
        print(f"\nfirst member of cluster {cid}: {member}")
        print("  log tail:", detail["members"][0]["log_tail"].splitlines()[-1])

        # Draft a rule for the locale failures and see how much of the
        # cluster it would cover before committing to it.
        draft = {
            "id": "locale1",
            "static_re": r"FROM postgres:\d+",
            "dynamic_re": r"invalid locale settings",
            "solutions": [[{
                "op": "insert_after",
                "target": "FROM",
                "text": "\nENV LANG=en_US.UTF-8",
            }]],
        }
        dry = call(base, "POST", "/rules/dry-run",
                   {"rule": draft, "cluster_id": cid, "preview_record": member})
        print(f"\ndry run: matches {len(dry['matched_ids'])}/{dry['total']} "
              f"of cluster {cid} (fraction {dry['fraction']:.2f})")
        print("  preview diff:")
        for line in dry["preview"]["variants"][0]["diff"].splitlines():
            print("   ", line)

        saved = call(base, "POST", "/rules", {"kind": "repair", "rule": draft})
        print(f"\nsaved rule {saved['saved']}; rule db version {saved['version']}")

        fix = call(base, "POST", f"/repair/{member}")
        print(f"repair of {member}: {fix['outcome']} by rule "
              f"{fix['rule_id']}, {len(fix['variants'])} variant(s)")

        fallback = call(base, "POST", "/repair/misc0")
        print(f"repair of misc0: {fallback['outcome']} "
              f"(query: {fallback['query']!r})")
    finally:
        server.shutdown()
        server.server_close()
print("\nserver stopped")
