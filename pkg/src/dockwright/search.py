"""Web-search fallback: keywords from failing logs, allowlisted results.

When no rule covers a failure, the last error-bearing log line is boiled
down to keywords, prefixed with "dockerfile", and sent to a pluggable
search backend (GET /search?q=...). Results are filtered to community
forum domains and truncated to the top five.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import urlencode, urlsplit

import requests

from .config import DEFAULT_ALLOWLIST
from .errors import ValidationError
from .logpipe import tokenize

ERROR_MARKERS = ("error", "fatal", "unable", "failed", "cannot")

# Fixed 50-word stoplist: function words plus single-letter tokenization
# debris (log prefixes like "E:" and "W:"). Must never swallow
# error-bearing nouns such as "unable" or "package".
STOPWORDS = frozenset(
    """
    a an the and or but if then else when while for in on at by of to
    from with is are was were be been do does did has have had it its
    this that these those you your we our they them not no e w i d
    """.split()
)

_PURE_NUMBER = re.compile(r"[0-9]+")
_HEXISH = re.compile(r"[0-9a-f]{6,}")

MAX_KEYWORDS = 8
QUERY_KEYWORD_CAP = 12


class SearchBackendError(RuntimeError):
    """Backend unreachable or answered with a non-200; retriable."""


class SearchProtocolError(RuntimeError):
    """Backend answered with a shape outside the wire contract."""


@dataclass(frozen=True)
class SearchQuery:
    keywords: tuple[str, ...]

    def __post_init__(self):
        if not 1 <= len(self.keywords) <= QUERY_KEYWORD_CAP:
            raise ValidationError("query needs between 1 and 12 keywords")

    @property
    def query_string(self) -> str:
        return "dockerfile " + " ".join(self.keywords)


@dataclass(frozen=True)
class SearchResult:
    url: str
    title: str
    source_domain: str


def _is_noise(token: str) -> bool:
    return token in STOPWORDS or bool(_PURE_NUMBER.fullmatch(token))


def _is_hex_id(word: str) -> bool:
    # long hex ids (digests, layer hashes) carry no search value; requiring
    # a digit spares ordinary words that happen to use only a-f letters.
    lowered = word.lower()
    return bool(_HEXISH.fullmatch(lowered)) and any(c.isdigit() for c in lowered)


def _pick_line(log: str) -> str:
    lines = [ln for ln in log.splitlines() if ln.strip()]
    if not lines:
        return ""
    for line in reversed(lines):
        lowered = line.lower()
        if any(marker in lowered for marker in ERROR_MARKERS):
            return line
    return lines[-1]


def extract_keywords(stderr_log: str, max_k: int = MAX_KEYWORDS) -> list[str]:
    """Keywords from the last error-bearing line (or last line at all)."""
    if max_k < 1:
        raise ValidationError("max_k must be >= 1")
    line = _pick_line(stderr_log)
    if not line:
        return []
    # drop path-like words and hash ids before tokenizing; the splitter
    # would otherwise shred them into useless fragments
    kept = [
        w
        for w in line.split()
        if "/" not in w and "\\" not in w and not _is_hex_id(w)
    ]
    out: list[str] = []
    seen = set()
    for token in tokenize(" ".join(kept)):
        if _is_noise(token) or token in seen:
            continue
        seen.add(token)
        out.append(token)
        if len(out) == max_k:
            break
    return out


def build_query(record, max_k: int = MAX_KEYWORDS) -> SearchQuery:
    """SearchQuery for a failing record; raises when the log yields no
    usable keywords."""
    log = record.stderr_log if record.stderr_log.strip() else record.stdout_log
    keywords = extract_keywords(log, max_k)
    if not keywords:
        raise ValidationError(
            f"record {record.record_id}: no keywords extractable from log"
        )
    return SearchQuery(tuple(keywords[:QUERY_KEYWORD_CAP]))


def _match_allowlist(url: str, allowlist) -> str | None:
    parts = urlsplit(url)
    host = (parts.hostname or "").lower()
    path = parts.path or "/"
    for entry in allowlist:
        if "/" in entry:
            domain, _, path_pat = entry.partition("/")
            if host != domain.lower():
                continue
            regex = "^/" + re.escape(path_pat).replace(r"\*", r"(?:[^/]+/)*[^/]+") + r"(?:/|$)"
            if re.match(regex, path):
                return entry
        elif host == entry.lower() or host.endswith("." + entry.lower()):
            return entry
    return None


def search_top5(
    query: SearchQuery,
    backend_url: str,
    allowlist=DEFAULT_ALLOWLIST,
    timeout: float = 15.0,
) -> list[SearchResult]:
    """Submit the query, keep allowlisted results in backend rank order,
    return at most five."""
    url = backend_url.rstrip("/") + "/search?" + urlencode({"q": query.query_string})
    try:
        resp = requests.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise SearchBackendError(f"search backend unreachable: {exc}") from exc
    if resp.status_code != 200:
        raise SearchBackendError(f"search backend returned {resp.status_code}")
    try:
        raw = resp.json()
    except ValueError as exc:
        raise SearchProtocolError(f"search response is not JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise SearchProtocolError("search response must be a JSON array")
    out: list[SearchResult] = []
    for item in raw:
        if not isinstance(item, dict) or not isinstance(item.get("url"), str):
            raise SearchProtocolError(f"malformed search result: {item!r}")
        entry = _match_allowlist(item["url"], allowlist)
        if entry is None:
            continue
        out.append(SearchResult(item["url"], str(item.get("title", "")), entry))
        if len(out) == 5:
            break
    return out


def make_searcher(backend_url: str | None, allowlist=DEFAULT_ALLOWLIST):
    """Callable suitable for rules.repair; None url means no backend."""
    if not backend_url:
        return None

    def searcher(query: SearchQuery) -> list[SearchResult]:
        return search_top5(query, backend_url, allowlist)

    return searcher
