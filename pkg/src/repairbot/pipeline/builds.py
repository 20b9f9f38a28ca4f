"""Builds, their logs, and local reproduction of logged failures."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

from ..minilang import ErrorKind
from ..minilang.interp import DEFAULT_BUDGET
from ..testkit import CompileError, ManifestError, ParsedProject, Project, SuiteReport, run_suite
from .storage import read_json

LOG_FILE = "build.log"
META_FILE = "build.json"
SUCCESS_MARKER = "BUILD SUCCESS"
FAILURE_MARKER = "BUILD FAILURE"

_PASS = re.compile(r"^\[PASS\] test (\S+)$")
_FAIL = re.compile(r"^\[FAIL\] test (\S+): (\w+)$")
_ERROR = re.compile(r"^\[ERROR\] compilation: (.*)$")


class MalformedLog(ValueError):
    pass


class SnapshotInvalid(Exception):
    pass


class Outcome(str, enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"


class FailureKind(str, enum.Enum):
    COMPILE_ERROR = "CompileError"
    TEST_FAILURE = "TestFailure"


class ReproStatus(str, enum.Enum):
    REPRODUCED = "Reproduced"
    NOT_REPRODUCED = "NotReproduced"


@dataclass(frozen=True)
class Build:
    id: str
    snapshot: Path
    log: str
    outcome: Outcome
    created_at: datetime

    @classmethod
    def load(cls, directory: Union[str, Path], detected: datetime, budget: int = DEFAULT_BUDGET) -> "Build":
        """Read ``<dir>/build.log`` or, when absent, run the build to produce one.

        ``created_at`` comes from ``build.json``; builds without one are
        treated as created when detected.
        """
        directory = Path(directory)
        meta = read_json(directory / META_FILE, {}) or {}
        created = meta.get("created_at")
        created_at = datetime.fromisoformat(created) if created else detected
        log_path = directory / LOG_FILE
        log = log_path.read_text(encoding="utf-8") if log_path.exists() else run_build(directory, budget)
        return cls(directory.name, directory, log, outcome_of(log), created_at)


def outcome_of(log: str) -> Outcome:
    lines = [l.strip() for l in log.splitlines() if l.strip()]
    if not lines or lines[-1] not in (SUCCESS_MARKER, FAILURE_MARKER):
        raise MalformedLog("log has no terminal BUILD SUCCESS/BUILD FAILURE line")
    return Outcome.SUCCESS if lines[-1] == SUCCESS_MARKER else Outcome.FAILURE


# -- logs --------------------------------------------------------------------


def format_log(report: Optional[SuiteReport] = None, compile_error: Optional[str] = None) -> str:
    lines = []
    if compile_error is not None:
        lines.append(f"[ERROR] compilation: {compile_error}")
    else:
        for r in report.results:
            if r.passed:
                lines.append(f"[PASS] test {r.test}")
            else:
                lines.append(f"[FAIL] test {r.test}: {r.error.kind.value}")
    ok = compile_error is None and report.all_passed
    lines.append(SUCCESS_MARKER if ok else FAILURE_MARKER)
    return "\n".join(lines) + "\n"


def run_build(root: Union[str, Path], budget: int = DEFAULT_BUDGET) -> str:
    """Compile and test the project at ``root``; return the synthesized log."""
    try:
        project = Project.load(root)
        parsed = ParsedProject.from_project(project)
    except ManifestError as exc:
        return format_log(compile_error=f"invalid manifest: {exc}")
    except CompileError as exc:
        return format_log(compile_error=str(exc))
    return format_log(run_suite(parsed, budget))


@dataclass(frozen=True)
class BuildAnalysis:
    kind: Optional[FailureKind]
    failing: tuple[str, ...] = ()
    error_kinds: tuple[ErrorKind, ...] = ()
    passing: tuple[str, ...] = ()
    compile_message: Optional[str] = None

    def __post_init__(self):
        if bool(self.failing) != (self.kind is FailureKind.TEST_FAILURE):
            raise ValueError("failing tests must be nonempty exactly for TestFailure")


def analyze_log(log: str) -> BuildAnalysis:
    """Classify a build log. Lines outside the documented format are ignored."""
    outcome = outcome_of(log)
    failing, kinds, passing = [], [], []
    compile_message = None
    for raw in log.splitlines():
        line = raw.rstrip()
        if m := _FAIL.match(line):
            try:
                kind = ErrorKind(m.group(2))
            except ValueError:
                raise MalformedLog(f"unknown error kind {m.group(2)!r}") from None
            failing.append(m.group(1))
            kinds.append(kind)
        elif m := _PASS.match(line):
            passing.append(m.group(1))
        elif m := _ERROR.match(line):
            compile_message = m.group(1)
    if compile_message is not None:
        return BuildAnalysis(FailureKind.COMPILE_ERROR, compile_message=compile_message)
    if failing:
        return BuildAnalysis(FailureKind.TEST_FAILURE, tuple(failing), tuple(kinds), tuple(passing))
    if outcome is Outcome.FAILURE:
        raise MalformedLog("BUILD FAILURE without a failing test or compilation error")
    return BuildAnalysis(None, passing=tuple(passing))


# -- reproduction ------------------------------------------------------------


@dataclass
class ReproductionResult:
    status: ReproStatus
    observed_failing: tuple[str, ...]
    reason: str = ""
    parsed: Optional[ParsedProject] = field(default=None, repr=False, compare=False)
    report: Optional[SuiteReport] = field(default=None, repr=False, compare=False)

    @property
    def reproduced(self) -> bool:
        return self.status is ReproStatus.REPRODUCED


def reproduce(build: Build, analysis: BuildAnalysis, budget: int = DEFAULT_BUDGET) -> ReproductionResult:
    if analysis.kind is not FailureKind.TEST_FAILURE:
        raise ValueError("only test-failure builds are reproduced")
    try:
        parsed = ParsedProject.from_project(Project.load(build.snapshot))
    except (ManifestError, CompileError) as exc:
        raise SnapshotInvalid(f"{build.id}: {exc}") from exc
    report = run_suite(parsed, budget)
    observed = tuple(report.failing)
    logged = set(analysis.failing)
    if set(observed) == logged:
        return ReproductionResult(ReproStatus.REPRODUCED, observed, "", parsed, report)
    missing = sorted(logged - set(observed))
    extra = sorted(set(observed) - logged)
    parts = []
    if missing:
        parts.append("logged but passing locally: " + ", ".join(missing))
    if extra:
        parts.append("failing locally but not logged: " + ", ".join(extra))
    return ReproductionResult(ReproStatus.NOT_REPRODUCED, observed, "; ".join(parts), parsed, report)
