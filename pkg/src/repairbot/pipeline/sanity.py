"""Automated well-formedness gate run on every drafted patch before review."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from ..minilang import nodes as n
from ..minilang.interp import DEFAULT_BUDGET
from ..patch import DiffApplyError, Patch, apply_diff, changed_lines, parse_diff
from ..testkit import CompileError, ParsedProject, Project, run_suite

DEFAULT_MAX_DIFF_LINES = 50


class RejectReason(str, enum.Enum):
    TEST_MODIFIED = "TestModified"
    TOO_LARGE = "TooLarge"
    DIFF_DOES_NOT_APPLY = "DiffDoesNotApply"
    DOES_NOT_PARSE = "DoesNotParse"
    SOURCES_MISMATCH = "SourcesMismatch"
    ASSERT_DELETED = "AssertDeleted"
    SUITE_FAILS = "SuiteFails"


@dataclass(frozen=True)
class SanityVerdict:
    reason: Optional[RejectReason] = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.reason is None

    def __str__(self):
        return "Ok" if self.ok else f"Reject({self.reason.value})"


OK = SanityVerdict()


def _asserts(parsed: ParsedProject) -> Counter:
    return Counter(
        (ast.path, n.strip_meta(node)) for ast in parsed.src_asts for node in ast.nodes if isinstance(node, n.Assert)
    )


def sanity_check(
    patch: Patch,
    snapshot: Project,
    max_diff_lines: int = DEFAULT_MAX_DIFF_LINES,
    budget: int = DEFAULT_BUDGET,
) -> SanityVerdict:
    """Cheap structural rules first, the full suite run last."""
    try:
        touched = list(parse_diff(patch.diff))
    except DiffApplyError as exc:
        return SanityVerdict(RejectReason.DIFF_DOES_NOT_APPLY, str(exc))
    tests = [p for p in touched if snapshot.is_test_path(p)]
    if tests:
        return SanityVerdict(RejectReason.TEST_MODIFIED, ", ".join(tests))
    size = changed_lines(patch.diff)
    if size > max_diff_lines:
        return SanityVerdict(RejectReason.TOO_LARGE, f"{size} changed lines > {max_diff_lines}")

    sources = {f.path: f.text for f in snapshot.files}
    try:
        patched_texts = apply_diff(patch.diff, sources)
    except DiffApplyError as exc:
        return SanityVerdict(RejectReason.DIFF_DOES_NOT_APPLY, str(exc))
    if patched_texts != patch.patched_sources:
        return SanityVerdict(RejectReason.SOURCES_MISMATCH, "diff does not reproduce the patched sources")
    try:
        before = ParsedProject.from_project(snapshot)
        after = ParsedProject.from_project(snapshot.with_sources(patched_texts))
    except CompileError as exc:
        return SanityVerdict(RejectReason.DOES_NOT_PARSE, str(exc))

    lost = _asserts(before) - _asserts(after)
    if lost:
        return SanityVerdict(RejectReason.ASSERT_DELETED, f"{sum(lost.values())} assert(s) removed")

    report = run_suite(after, budget)
    if not report.all_passed:
        return SanityVerdict(RejectReason.SUITE_FAILS, ", ".join(report.failing))
    return OK
