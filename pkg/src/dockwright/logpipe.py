"""Log-tail extraction, aggressive normalization, and token splitting.

normalize() produces the canonical log form that rule patterns and the
embedder consume: lowercase, printable ASCII only, repetitive
punctuation blocks cleared, single spaces. tokenize() then splits on
whitespace, a fixed delimiter set, camel-case boundaries, and
digit/letter boundaries.
"""
from __future__ import annotations

import re
import string
from dataclasses import dataclass

from .errors import ValidationError

DEFAULT_TAIL_LINES = 15

_PRINTABLE = frozenset(chr(c) for c in range(0x20, 0x7F))
_PUNCT = frozenset(string.punctuation)
_REPEAT4 = re.compile(r"(.)\1{3,}")
_WHITESPACE_RUN = re.compile(r"\s+")
_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
# the delimiter set: _ - / \ . : ; , = ( ) [ ] { } < > | & " ' !
_DELIMS = re.compile(r"""[_\-/\\.:;,=()\[\]{}<>|&"'!]""")
_DIGIT_ALPHA = re.compile(r"(?<=[0-9])(?=[A-Za-z])|(?<=[A-Za-z])(?=[0-9])")


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    origin_record: str = ""

    def joined(self) -> str:
        return " ".join(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self):
        return len(self.tokens)


def tail_error_log(stderr_log: str, k: int = DEFAULT_TAIL_LINES, stdout_log: str = "") -> str:
    """Last k non-blank stderr lines; falls back to stdout when stderr
    has none."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    lines = [ln for ln in stderr_log.splitlines() if ln.strip()]
    if not lines:
        lines = [ln for ln in stdout_log.splitlines() if ln.strip()]
    return "\n".join(lines[-k:])


def normalize(text: str) -> str:
    """Lowercase, strip non-printable/non-ASCII, clear repetitive
    punctuation blocks, collapse whitespace. Idempotent.

    A maximal punctuation run containing four or more consecutive
    identical characters collapses to the run's first character, so
    banner noise like "=====>" becomes "=".
    """
    text = text.lower()
    text = "".join(ch for ch in text if ch in _PRINTABLE or ch.isspace())
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] in _PUNCT:
            j = i + 1
            while j < n and text[j] in _PUNCT:
                j += 1
            run = text[i:j]
            out.append(run[0] if _REPEAT4.search(run) else run)
            i = j
        else:
            out.append(text[i])
            i += 1
    return _WHITESPACE_RUN.sub(" ", "".join(out)).strip()


def tokenize(text: str, origin_record: str = "") -> TokenSequence:
    """Split normalized text into lowercase tokens.

    Camel-case boundaries are split before normalization lowercases
    them; already-normalized input passes through that step unchanged.
    """
    text = _CAMEL.sub(" ", text)
    text = normalize(text)
    tokens: list[str] = []
    for word in text.split():
        for part in _DELIMS.split(word):
            for frag in _DIGIT_ALPHA.split(part):
                if frag:
                    tokens.append(frag)
    return TokenSequence(tuple(tokens), origin_record)
