"""Spectrum-based fault localization (Ochiai)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Optional

from .testkit import ParsedProject, SuiteReport

DEFAULT_TOP_K = 20


class NoFailingTests(ValueError):
    pass


@dataclass(frozen=True)
class CoverageRow:
    test: str
    covered: frozenset
    failed: bool


@dataclass(frozen=True)
class CoverageMatrix:
    rows: tuple[CoverageRow, ...]
    universe: frozenset

    def __post_init__(self):
        for row in self.rows:
            extra = row.covered - self.universe
            if extra:
                raise ValueError(f"row {row.test} covers ids outside the universe: {sorted(extra)[:3]}")

    @classmethod
    def from_report(cls, report: SuiteReport, universe: Iterable[Hashable]) -> "CoverageMatrix":
        universe = frozenset(universe)
        rows = tuple(CoverageRow(r.test, r.covered & universe, not r.passed) for r in report.results)
        return cls(rows, universe)


@dataclass(frozen=True)
class SuspiciousnessMap:
    entries: dict
    ranking: tuple

    def score(self, key) -> float:
        return self.entries[key]

    def top(self, k: int = DEFAULT_TOP_K) -> tuple:
        return self.ranking[:k]


def ochiai(matrix: CoverageMatrix) -> SuspiciousnessMap:
    """score = ef / sqrt((ef + nf) * (ef + ep)), 0 when the denominator is 0."""
    failing = [r for r in matrix.rows if r.failed]
    if not failing:
        raise NoFailingTests("localization needs at least one failing test")
    total_failed = len(failing)
    ef = dict.fromkeys(matrix.universe, 0)
    ep = dict.fromkeys(matrix.universe, 0)
    for row in matrix.rows:
        counts = ef if row.failed else ep
        for key in row.covered:
            counts[key] += 1
    entries = {}
    for key in matrix.universe:
        denom = math.sqrt(total_failed * (ef[key] + ep[key]))
        entries[key] = ef[key] / denom if denom else 0.0
    ranking = tuple(sorted(matrix.universe, key=lambda k: (-entries[k], k)))
    return SuspiciousnessMap(entries, ranking)


def localize(parsed: ParsedProject, report: SuiteReport) -> SuspiciousnessMap:
    return ochiai(CoverageMatrix.from_report(report, parsed.statement_universe()))


def dump_tsv(susp: SuspiciousnessMap, parsed: ParsedProject, path: Path, limit: Optional[int] = None) -> None:
    lines = ["node_id\tfile\tline\tscore"]
    for file_path, node_id in susp.ranking[:limit]:
        ast = parsed.asts[file_path]
        line = ast.line_of(ast.node(node_id))
        lines.append(f"{node_id}\t{file_path}\t{line}\t{susp.entries[(file_path, node_id)]:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
