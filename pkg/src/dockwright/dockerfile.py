"""Span-preserving Dockerfile parser, serializer, and span splicer.

The parser is total: any input (including broken or binary-ish files)
yields an AST whose serialization is byte-for-byte the input. Malformed
content is represented with COMMENT/UNKNOWN nodes, never rejected.
Instruction spans index the source text and exclude surrounding blank
space, so span-anchored edits produce minimal diffs.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ValidationError

KNOWN_KINDS = frozenset({
    "ADD", "ARG", "CMD", "COPY", "ENTRYPOINT", "ENV", "EXPOSE", "FROM",
    "HEALTHCHECK", "LABEL", "MAINTAINER", "ONBUILD", "RUN", "SHELL",
    "STOPSIGNAL", "USER", "VOLUME", "WORKDIR",
})

_KEYWORD = re.compile(r"[^\s]+")
_TRAILING_BLANK = " \t\r\x0b\x0c"


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int  # exclusive

    def overlaps(self, other: "SourceSpan") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Instruction:
    kind: str
    args_raw: str
    span: SourceSpan


@dataclass(frozen=True)
class DockerfileAst:
    source: str
    instructions: tuple[Instruction, ...]

    def instruction_at(self, offset: int) -> Instruction | None:
        """Instruction whose span contains the offset (span end included,
        so zero-width anchors at the end of a line resolve here)."""
        for ins in self.instructions:
            if ins.span.start <= offset <= ins.span.end:
                return ins
        return None

    def first_of_kind(self, kind: str) -> Instruction | None:
        for ins in self.instructions:
            if ins.kind == kind:
                return ins
        return None


def _physical_lines(text: str) -> list[tuple[int, int]]:
    """(start, content_end) per line; content_end excludes the newline."""
    out = []
    pos = 0
    n = len(text)
    while pos < n:
        nl = text.find("\n", pos)
        if nl == -1:
            out.append((pos, n))
            pos = n
        else:
            out.append((pos, nl))
            pos = nl + 1
    return out


def _continues(content: str) -> bool:
    # a line continues iff it ends in an odd run of backslashes
    trimmed = content.rstrip(_TRAILING_BLANK)
    run = len(trimmed) - len(trimmed.rstrip("\\"))
    return run % 2 == 1


def parse(text: str) -> DockerfileAst:
    """Parse into an instruction list; never raises on malformed input."""
    lines = _physical_lines(text)
    instructions: list[Instruction] = []
    i = 0
    while i < len(lines):
        start, content_end = lines[i]
        line = text[start:content_end]
        stripped = line.strip()
        if not stripped:
            i += 1
            continue
        first = start + (len(line) - len(line.lstrip()))
        if stripped.startswith("#"):
            # comments are single physical lines; no continuation applies
            end = first + len(text[first:content_end].rstrip())
            instructions.append(
                Instruction("COMMENT", stripped[1:].strip(), SourceSpan(first, end))
            )
            i += 1
            continue
        # join continuation lines; a comment line inside a continuation
        # terminates it here (the engine would skip it, but no shipped
        # rule anchors on that corner and round-tripping is unaffected)
        parts: list[str] = []
        j = i
        last_end = content_end
        while True:
            seg_start, seg_end = lines[j]
            body = text[first:seg_end] if j == i else text[seg_start:seg_end]
            last_end = seg_end
            if _continues(body) and j + 1 < len(lines):
                parts.append(body.rstrip(_TRAILING_BLANK)[:-1])
                j += 1
            else:
                parts.append(body)
                break
        joined = "".join(parts)
        m = _KEYWORD.match(joined)
        word = m.group(0) if m else joined
        kind = word.upper() if word.upper() in KNOWN_KINDS else "UNKNOWN"
        args = joined[len(word):].strip() if kind != "UNKNOWN" else joined.strip()
        end = first + len(text[first:last_end].rstrip())
        instructions.append(Instruction(kind, args, SourceSpan(first, end)))
        i = j + 1
    return DockerfileAst(text, tuple(instructions))


def serialize(ast: DockerfileAst) -> str:
    """Inverse of parse; returns the original source byte-exactly."""
    return ast.source


class SpliceError(ValidationError):
    """Edit spans are out of bounds or overlap."""


def splice(ast: DockerfileAst | str, edits) -> str:
    """Apply (SourceSpan, replacement) edits; right-to-left so offsets hold.

    Empty replacement removes the span; a zero-width span inserts.
    Spans must be pairwise non-overlapping; touching endpoints are fine.
    """
    source = ast if isinstance(ast, str) else ast.source
    normalized = []
    for idx, (span, replacement) in enumerate(edits):
        if not (0 <= span.start <= span.end <= len(source)):
            raise SpliceError(
                f"edit {idx} span ({span.start}, {span.end}) out of bounds "
                f"for source of length {len(source)}"
            )
        normalized.append((span.start, span.end, idx, replacement))
    ordered = sorted(normalized, key=lambda e: (e[0], e[1], e[2]))
    for a, b in zip(ordered, ordered[1:]):
        if a[1] > b[0]:
            raise SpliceError(
                f"edits {a[2]} and {b[2]} overlap: "
                f"({a[0]}, {a[1]}) vs ({b[0]}, {b[1]})"
            )
    out = source
    for start, end, _, replacement in reversed(ordered):
        out = out[:start] + replacement + out[end:]
    return out
