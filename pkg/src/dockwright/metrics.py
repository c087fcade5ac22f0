"""Evaluation quantities: rule coverage, per-cluster solution mix, and
equivalence between generated and developer patches.

Coverage asks how far a rule generalizes beyond the cluster it was
written for. Solution proportions summarize, per non-singleton cluster,
how many members get a repair, a suggestion, or nothing. Patch
equivalence compares a generated variant with what the developer really
committed, at the instruction level rather than byte level.
"""
from __future__ import annotations

import difflib
import warnings
from dataclasses import dataclass
from enum import Enum

from .cluster import ClusterAssignment
from .dockerfile import parse
from .rules import RuleDb, match_rule, record_log_text


@dataclass(frozen=True)
class CoverageRow:
    rule_id: str
    cluster_count: int
    parent_coverage: float | None
    average_coverage: float


@dataclass(frozen=True)
class ClusterProportion:
    cluster_id: int
    repaired_frac: float
    suggested_frac: float
    unknown_frac: float


class EquivalenceTag(Enum):
    IDENTICAL_REPAIR = "IdenticalRepair"
    SUGGESTION_MATCH = "SuggestionMatch"
    NO_MATCH = "NoMatch"


@dataclass(frozen=True)
class EquivalenceVerdict:
    tag: EquivalenceTag
    detail: str


def _labels_by_record(assignment, records) -> dict[str, int]:
    if isinstance(assignment, ClusterAssignment):
        if len(assignment.labels) != len(records):
            raise ValueError(
                f"assignment covers {len(assignment.labels)} points, "
                f"got {len(records)} records"
            )
        return {r.record_id: l for r, l in zip(records, assignment.labels)}
    return dict(assignment)


def _clusters(assignment, records):
    """Map cluster id -> member records, noise excluded."""
    labels = _labels_by_record(assignment, records)
    out: dict[int, list] = {}
    for record in records:
        label = labels.get(record.record_id, -1)
        if label != -1:
            out.setdefault(label, []).append(record)
    return out


def repair_coverage(db: RuleDb, assignment, records) -> list[CoverageRow]:
    """One row per repair rule that matches at least one clustered
    record. assignment is a ClusterAssignment aligned with records, or a
    mapping record_id -> label."""
    clusters = _clusters(assignment, records)
    rows: list[CoverageRow] = []
    for rule in db.repairs:
        fractions: dict[int, float] = {}
        for cid, members in sorted(clusters.items()):
            hits = sum(
                1
                for r in members
                if match_rule(rule.pattern, r.dockerfile_text, record_log_text(r))
            )
            if hits:
                fractions[cid] = hits / len(members)
        if not fractions:
            continue
        if rule.parent_cluster is not None and rule.parent_cluster in fractions:
            parent = fractions[rule.parent_cluster]
        elif rule.parent_cluster is not None and rule.parent_cluster in clusters:
            parent = 0.0
        else:
            warnings.warn(
                f"rule {rule.rule_id}: parent cluster "
                f"{rule.parent_cluster!r} not in this clustering",
                stacklevel=2,
            )
            parent = None
        average = sum(fractions.values()) / len(fractions)
        rows.append(CoverageRow(rule.rule_id, len(fractions), parent, average))
    return rows


def solution_proportions(db: RuleDb, assignment, records) -> list[ClusterProportion]:
    """Repaired/suggested/unknown mix per non-singleton cluster, using
    first-match rule precedence. No search backend is consulted; records
    that would fall back to search count as unknown."""
    clusters = _clusters(assignment, records)
    out: list[ClusterProportion] = []
    for cid, members in sorted(clusters.items()):
        if len(members) < 2:
            continue
        repaired = suggested = 0
        for record in members:
            log_text = record_log_text(record)
            if any(
                match_rule(r.pattern, record.dockerfile_text, log_text)
                for r in db.repairs
            ):
                repaired += 1
            elif any(
                match_rule(s.pattern, record.dockerfile_text, log_text)
                for s in db.suggestions
            ):
                suggested += 1
        n = len(members)
        unknown = n - repaired - suggested
        out.append(ClusterProportion(cid, repaired / n, suggested / n, unknown / n))
    return out


def _instruction_tuples(text: str) -> list[tuple[str, str]]:
    return [
        (ins.kind, " ".join(ins.args_raw.split()))
        for ins in parse(text).instructions
        if ins.kind != "COMMENT"
    ]


def _line_offsets(text: str) -> list[int]:
    offsets = [0]
    for line in text.splitlines(keepends=True):
        offsets.append(offsets[-1] + len(line))
    return offsets


def _diff_touches(broken_text: str, developer_text: str):
    """Instructions changed on the broken side and instruction kinds
    inserted on the developer side, from a line-level diff."""
    broken_lines = broken_text.splitlines(keepends=True)
    dev_lines = developer_text.splitlines(keepends=True)
    matcher = difflib.SequenceMatcher(None, broken_lines, dev_lines, autojunk=False)
    broken_ast = parse(broken_text)
    dev_ast = parse(developer_text)
    b_off = _line_offsets(broken_text)
    d_off = _line_offsets(developer_text)
    changed = []
    inserted_kinds = set()
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag in ("replace", "delete") and i2 > i1:
            start, end = b_off[i1], b_off[i2]
            for ins in broken_ast.instructions:
                if ins.span.start < end and start < ins.span.end:
                    changed.append(ins)
        if tag in ("replace", "insert") and j2 > j1:
            start, end = d_off[j1], d_off[j2]
            for ins in dev_ast.instructions:
                if ins.span.start < end and start < ins.span.end:
                    inserted_kinds.add(ins.kind)
    return broken_ast, changed, inserted_kinds


def patch_equivalence(
    broken_text: str,
    generated_variant: str | None,
    developer_text: str,
    db: RuleDb | None = None,
    log_text: str | None = None,
) -> EquivalenceVerdict:
    """Compare a generated patch (or the fact that only a suggestion
    fired) against the developer's actual fix.

    IdenticalRepair: same non-comment instruction sequence, whitespace
    inside instructions ignored. SuggestionMatch: a suggestion fired for
    the broken record (db and its normalized log required) and the
    developer's diff touches the instruction the suggestion points at.
    """
    if generated_variant is not None and _instruction_tuples(
        generated_variant
    ) == _instruction_tuples(developer_text):
        return EquivalenceVerdict(
            EquivalenceTag.IDENTICAL_REPAIR,
            "generated variant and developer fix parse to the same instructions",
        )
    if db is not None and log_text is not None:
        for suggestion in db.suggestions:
            binding = match_rule(suggestion.pattern, broken_text, log_text)
            if binding is None:
                continue
            broken_ast, changed, inserted_kinds = _diff_touches(
                broken_text, developer_text
            )
            if binding.static_span is not None:
                target = broken_ast.instruction_at(binding.static_span.start)
                if target is not None and any(ins is target for ins in changed):
                    return EquivalenceVerdict(
                        EquivalenceTag.SUGGESTION_MATCH,
                        f"suggestion {suggestion.suggestion_id} points at an "
                        "instruction the developer changed",
                    )
            elif suggestion.target_kind is not None:
                kind = suggestion.target_kind.upper()
                if any(ins.kind == kind for ins in changed) or kind in inserted_kinds:
                    return EquivalenceVerdict(
                        EquivalenceTag.SUGGESTION_MATCH,
                        f"suggestion {suggestion.suggestion_id} targets "
                        f"{kind} and the developer touched one",
                    )
            break  # first firing suggestion decides, mirroring precedence
    return EquivalenceVerdict(
        EquivalenceTag.NO_MATCH, "developer fix unrelated to any generated output"
    )
