"""Shared fixtures: synthetic build-record corpora, stub HTTP backends
for search and embedding, and a fake container engine binary.

The two failure families are sized and worded so that the default
clustering parameters put each family in its own cluster with the two
odd records left as noise; several tests freeze that shape.
"""
from __future__ import annotations

import json
import stat
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from dockwright.corpus import BuildOutcome, BuildRecord, persist_corpus

APT_PACKAGES = (
    "python-pip", "curl", "wget", "git", "vim",
    "nano", "tmux", "htop", "jq", "zip",
)
RUBY_VERSIONS = tuple(
    (f"2.6.{a}", f"2.6.{b}") for a in range(5) for b in (5, 6)
)


def make_record(
    rid,
    dockerfile,
    stderr,
    *,
    stdout="",
    outcome=BuildOutcome.FAILURE,
    duration=42.0,
    repo=None,
    meta=None,
):
    return BuildRecord(
        record_id=rid,
        repo_ref=repo or f"github.com/acme/{rid}",
        dockerfile_path="Dockerfile",
        dockerfile_text=dockerfile,
        stdout_log=stdout,
        stderr_log=stderr,
        outcome=outcome,
        duration=duration,
        captured_at="2026-08-01T00:00:00Z",
        meta=meta or {},
    )


def apt_family():
    """Ten near-identical apt install failures on ubuntu:latest."""
    records = []
    for i, pkg in enumerate(APT_PACKAGES):
        dockerfile = (
            f"FROM ubuntu:latest\n"
            f"RUN apt-get update && apt-get -y install {pkg}\n"
        )
        stderr = (
            f"E: Unable to locate package {pkg}\n"
            f"The command '/bin/sh -c apt-get -y install {pkg}' "
            f"returned a non-zero code: 100"
        )
        records.append(make_record(f"a{i}", dockerfile, stderr))
    return records


def ruby_family():
    """Ten Gemfile version-mismatch failures on assorted ruby:2.6.x tags."""
    records = []
    for i, (cur, want) in enumerate(RUBY_VERSIONS):
        dockerfile = (
            f"FROM ruby:{cur}\n"
            "RUN apt-get update -qq && apt-get install -y build-essential\n"
            "RUN gem install bundler:2.0.1\n"
            "RUN bundle install\n"
            "ADD . /app\n"
        )
        stderr = (
            f"rake aborted!\n"
            f"Your Ruby version is {cur}, but your Gemfile specified {want}\n"
            f"run bundle install to continue"
        )
        records.append(make_record(f"b{i}", dockerfile, stderr))
    return records


NPM_LOG = """npm ERR! code ELIFECYCLE
npm ERR! errno 1
npm ERR! webapp@1.0.0 build: `vite build --mode production`
npm ERR! Exit status 1
npm ERR! Failed at the webapp@1.0.0 build script.
npm ERR! This is probably not a problem with npm. There is likely additional logging output above.
npm ERR! A complete log of this run can be found in: /root/.npm/_logs/debug.log"""

MYSTERY_LOG = """checking host system type... x86_64-pc-linux-musl
checking whether the C compiler works... yes
checking for suffix of object files... o
configure: creating ./config.status
config.status: creating Makefile
gcc -O2 -pipe -fomit-frame-pointer -c vendor/quirk.c
vendor/quirk.c:117:3: warning: implicit declaration
collect2: ld terminated with signal 9 [Killed]"""


def outliers():
    """Two failures unlike either family; both should land in noise."""
    return [
        make_record(
            "npm0",
            "FROM node:14\nCOPY . /app\nRUN npm run build\n",
            NPM_LOG,
        ),
        make_record(
            "mys0",
            "FROM alpine:3.12\nRUN ./configure && make\n",
            MYSTERY_LOG,
        ),
    ]


def nonfailures():
    """One record per non-failure outcome; clustering must skip these."""
    return [
        make_record(
            "ok0",
            "FROM alpine:3.12\nRUN echo hello\n",
            "",
            stdout="Successfully built 4a5b6c7d\n",
            outcome=BuildOutcome.SUCCESS,
            duration=3.0,
        ),
        make_record(
            "to0",
            "FROM ubuntu:latest\nRUN sleep infinity\n",
            "",
            outcome=BuildOutcome.TIMEOUT,
            duration=1800.0,
        ),
        make_record(
            "ud0",
            "",
            "Cannot connect to the Docker daemon at unix:///var/run/docker.sock",
            outcome=BuildOutcome.UNDETERMINED,
            duration=0.5,
        ),
    ]


@pytest.fixture
def family_records():
    return apt_family() + ruby_family()


@pytest.fixture
def full_records():
    return apt_family() + ruby_family() + outliers() + nonfailures()


@pytest.fixture
def corpus_path(tmp_path, full_records):
    path = tmp_path / "corpus.jsonl"
    persist_corpus(full_records, path)
    return path


# --- stub search backend ---

CANNED_RESULTS = [
    {"url": "https://stackoverflow.com/questions/123/apt-fails", "title": "apt fails"},
    {"url": "https://evil.example.com/spam", "title": "spam"},
    {"url": "https://github.com/moby/moby/issues/456", "title": "moby issue"},
    {"url": "https://github.com/moby/moby/pull/999", "title": "moby pr"},
    {"url": "https://forums.docker.com/t/build-error/111", "title": "forum thread"},
    {"url": "https://meta.stackoverflow.com/questions/77", "title": "meta question"},
    {"url": "https://blog.random.io/post", "title": "blog post"},
    {"url": "https://serverfault.com/questions/42", "title": "serverfault"},
    {"url": "https://superuser.com/questions/314", "title": "superuser"},
    {"url": "https://stackoverflow.com.evil.net/x", "title": "lookalike"},
]

# First five canned entries that pass the default allowlist, in rank order.
EXPECTED_TOP5 = (
    ("https://stackoverflow.com/questions/123/apt-fails", "stackoverflow.com"),
    ("https://github.com/moby/moby/issues/456", "github.com/*/issues"),
    ("https://forums.docker.com/t/build-error/111", "forums.docker.com"),
    ("https://meta.stackoverflow.com/questions/77", "stackoverflow.com"),
    ("https://serverfault.com/questions/42", "serverfault.com"),
)


class _StubServer:
    """ThreadingHTTPServer on an OS-assigned port with a log of requests."""

    def __init__(self, handler_cls):
        handler = type("BoundStub", (handler_cls,), {"stub": self})
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}"
        self.requests = []
        self.thread = threading.Thread(
            target=self.server.serve_forever, daemon=True
        )
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


class _BaseStubHandler(BaseHTTPRequestHandler):
    stub: _StubServer

    def log_message(self, fmt, *args):
        pass

    def reply(self, status, payload=None, raw=None):
        body = raw if raw is not None else json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class _SearchStubHandler(_BaseStubHandler):
    def do_GET(self):
        from urllib.parse import parse_qs, urlsplit

        parts = urlsplit(self.path)
        if parts.path != "/search":
            return self.reply(404, {"error": "not found"})
        q = (parse_qs(parts.query).get("q") or [""])[0]
        self.stub.requests.append(q)
        if "exploded" in q:
            return self.reply(500, {"error": "backend exploded"})
        if "misshapen" in q:
            return self.reply(200, {"results": CANNED_RESULTS})
        if "badentry" in q:
            return self.reply(200, [{"url": 5, "title": "x"}])
        if "notjson" in q:
            return self.reply(200, raw=b"this is not json")
        return self.reply(200, CANNED_RESULTS)


@pytest.fixture
def search_backend():
    stub = _StubServer(_SearchStubHandler)
    yield stub
    stub.close()


# --- stub remote embedder ---

class _EmbedStubHandler(_BaseStubHandler):
    def do_POST(self):
        if self.path != "/embed":
            return self.reply(404, {"error": "not found"})
        length = int(self.headers.get("Content-Length") or 0)
        payload = json.loads(self.rfile.read(length).decode("utf-8"))
        texts = payload.get("texts", [])
        self.stub.requests.append(texts)
        mode = getattr(self.stub, "mode", "ok")
        dim = getattr(self.stub, "dim", 8)
        if mode == "http500":
            return self.reply(500, {"error": "embedder exploded"})
        if mode == "notlist":
            return self.reply(200, {"vectors": 42})
        vectors = []
        for i, _text in enumerate(texts):
            width = dim + 1 if mode == "baddim" else dim
            vec = [0.0] * width
            vec[i % width] = float(i + 2)
            vectors.append(vec)
        if mode == "short" and vectors:
            vectors.pop()
        return self.reply(200, {"vectors": vectors})


@pytest.fixture
def embed_backend():
    stub = _StubServer(_EmbedStubHandler)
    stub.mode = "ok"
    stub.dim = 8
    yield stub
    stub.close()


# --- fake container engine ---

ENGINE_SCRIPT = """#!/bin/sh
if [ "$1" = "version" ]; then
  echo "fake-engine 1.0.0"
  exit 0
fi
df=""
prev=""
for a in "$@"; do
  if [ "$prev" = "-f" ]; then df="$a"; fi
  prev="$a"
done
if [ -n "$df" ] && [ -r "$df" ]; then
  if grep -q SLEEPMARK "$df"; then sleep 5; fi
  if grep -q DAEMONERR "$df"; then
    echo "Cannot connect to the Docker daemon at unix:///var/run/docker.sock. Is the docker daemon running?" >&2
    exit 1
  fi
  if grep -q COPYFAIL "$df"; then
    echo "COPY failed: stat /var/lib/docker/tmp/app: file does not exist" >&2
    exit 1
  fi
  if grep -q FAILME "$df"; then
    echo "E: Unable to locate package python-pip" >&2
    echo "The command '/bin/sh -c apt-get -y install python-pip' returned a non-zero code: 100" >&2
    exit 100
  fi
fi
echo "Successfully built 4a5b6c7d"
exit 0
"""


@pytest.fixture(scope="session")
def fake_engine(tmp_path_factory):
    path = tmp_path_factory.mktemp("engine") / "fake-engine"
    path.write_text(ENGINE_SCRIPT, encoding="utf-8")
    path.chmod(path.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return str(path)
