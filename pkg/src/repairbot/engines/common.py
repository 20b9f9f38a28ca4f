"""Shared pieces for the repair engines: errors, budgets and validation."""

from __future__ import annotations

import time
from typing import Callable, Optional

from ..minilang import Edit, InvalidEdit
from ..minilang.interp import DEFAULT_BUDGET
from ..patch import Engine, Patch, patched_project, render
from ..testkit import CompileError, ParsedProject, SuiteReport, run_suite


class NoFixFound(Exception):
    pass


class EngineBudgetExceeded(Exception):
    pass


class Deadline:
    """Wall-clock cap for one engine attempt."""

    def __init__(self, seconds: Optional[float], clock: Callable[[], float] = time.monotonic):
        self.clock = clock
        self.expires = None if seconds is None else clock() + seconds

    def check(self) -> None:
        if self.expires is not None and self.clock() > self.expires:
            raise EngineBudgetExceeded("engine wall-clock budget elapsed")

    def remaining(self) -> float:
        if self.expires is None:
            return float("inf")
        return max(0.0, self.expires - self.clock())


def exploration_budget(observed_steps: int, budget: int = DEFAULT_BUDGET) -> int:
    """Step cap for forced or mutated runs of a test.

    Runs that take ten times longer than the original test are treated as
    diverging; this keeps forced-true loops and looping mutants cheap.
    """
    return min(budget, max(10_000, 10 * observed_steps))


def try_edits(parsed: ParsedProject, edits: tuple[Edit, ...], budget: int = DEFAULT_BUDGET) -> Optional[SuiteReport]:
    """Run the full suite on the edited project; ``None`` if the edits do not apply."""
    try:
        candidate = patched_project(parsed, edits)
    except (InvalidEdit, CompileError):
        return None
    return run_suite(candidate, budget)


def make_patch(
    engine: Engine,
    parsed: ParsedProject,
    edits: tuple[Edit, ...],
    before: SuiteReport,
    after: SuiteReport,
    summary: str,
    **details,
) -> Patch:
    sources, diff = render(parsed, edits)
    fixed = [t for t in before.failing if after.result(t).passed]
    return Patch(
        engine=engine,
        edits=tuple(edits),
        diff=diff,
        patched_sources=sources,
        fixed_tests=fixed,
        summary=summary,
        details=details,
    )
