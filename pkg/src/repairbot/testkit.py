"""Project loading, test discovery and test execution with coverage."""

from __future__ import annotations

import enum
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .minilang import Ast, DuplicateFunction, MiniRuntimeError, NodeKey, ParseError, parse
from .minilang.interp import DEFAULT_BUDGET, ForceFn, Interpreter, RunResult, function_table

MANIFEST = "project.json"


class FileKind(str, enum.Enum):
    SRC = "src"
    TEST = "test"


class ManifestError(Exception):
    pass


class CompileError(Exception):
    """A project file failed to parse (the build's 'compilation fails')."""

    def __init__(self, path: str, message: str, line: int = 0, column: int = 0):
        self.path = path
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class SourceFile:
    path: str  # posix path relative to the project root
    text: str
    kind: FileKind


@dataclass(frozen=True)
class Project:
    name: str
    src_files: tuple[SourceFile, ...]
    test_files: tuple[SourceFile, ...]
    root: Optional[Path] = None
    src_dir: str = "src"
    tests_dir: str = "tests"

    @classmethod
    def load(cls, root: Union[str, Path]) -> "Project":
        root = Path(root)
        manifest_path = root / MANIFEST
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ManifestError(f"missing {MANIFEST} in {root}") from exc
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid {MANIFEST}: {exc}") from exc
        name = manifest.get("name")
        if not isinstance(name, str) or not name:
            raise ManifestError(f"{MANIFEST} needs a nonempty 'name'")
        src_dir = manifest.get("src", "src")
        tests_dir = manifest.get("tests", "tests")
        return cls(
            name=name,
            src_files=_collect(root, src_dir, FileKind.SRC),
            test_files=_collect(root, tests_dir, FileKind.TEST),
            root=root,
            src_dir=src_dir,
            tests_dir=tests_dir,
        )

    @property
    def files(self) -> tuple[SourceFile, ...]:
        return self.src_files + self.test_files

    def text_of(self, path: str) -> str:
        for f in self.files:
            if f.path == path:
                return f.text
        raise KeyError(path)

    def is_test_path(self, path: str) -> bool:
        return path == self.tests_dir or path.startswith(self.tests_dir.rstrip("/") + "/")

    def with_sources(self, texts: Mapping[str, str]) -> "Project":
        """Copy of the project with some file contents replaced."""
        known = {f.path for f in self.files}
        unknown = set(texts) - known
        if unknown:
            raise KeyError(f"not project files: {sorted(unknown)}")

        def update(files):
            return tuple(SourceFile(f.path, texts.get(f.path, f.text), f.kind) for f in files)

        return Project(self.name, update(self.src_files), update(self.test_files), None, self.src_dir, self.tests_dir)

    def write(self, dest: Union[str, Path]) -> Path:
        dest = Path(dest)
        dest.mkdir(parents=True, exist_ok=True)
        manifest = {"name": self.name, "src": self.src_dir, "tests": self.tests_dir}
        (dest / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        for f in self.files:
            target = dest / f.path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(f.text, encoding="utf-8")
        return dest


def _collect(root: Path, sub: str, kind: FileKind) -> tuple[SourceFile, ...]:
    base = root / sub
    if not base.is_dir():
        return ()
    files = []
    for p in sorted(base.rglob("*.mini")):
        rel = p.relative_to(root).as_posix()
        files.append(SourceFile(rel, p.read_text(encoding="utf-8"), kind))
    return tuple(files)


@dataclass(frozen=True)
class TestCase:
    id: str  # "<file>::<function>"
    path: str
    entry: str

    __test__ = False  # not a pytest class


class ParsedProject:
    """A project whose files all parsed, with function tables per test file."""

    def __init__(self, project: Project, asts: Mapping[str, Ast]):
        self.project = project
        self.asts: dict[str, Ast] = dict(asts)
        src = [self.asts[f.path] for f in project.src_files]
        try:
            function_table(src)
            self._tables = {
                f.path: function_table(src + [self.asts[f.path]]) for f in project.test_files
            }
        except DuplicateFunction as exc:
            raise CompileError("<project>", str(exc)) from exc

    @classmethod
    def from_project(cls, project: Project) -> "ParsedProject":
        asts = {}
        for f in project.files:
            try:
                asts[f.path] = parse(f.text, f.path)
            except ParseError as exc:
                raise CompileError(f.path, f"parse error at {exc.line}:{exc.column}: {exc.message}",
                                   exc.line, exc.column) from exc
        return cls(project, asts)

    def with_asts(self, replaced: Mapping[str, Ast]) -> "ParsedProject":
        """Variant with some ASTs swapped in (no reparsing)."""
        asts = dict(self.asts)
        asts.update(replaced)
        return ParsedProject(self.project, asts)

    @property
    def src_asts(self) -> list[Ast]:
        return [self.asts[f.path] for f in self.project.src_files]

    @cached_property
    def tests(self) -> list[TestCase]:
        cases = []
        for f in sorted(self.project.test_files, key=lambda f: f.path):
            for fn in self.asts[f.path].functions:
                if fn.name.startswith("test_") and not fn.params:
                    cases.append(TestCase(f"{f.path}::{fn.name}", f.path, fn.name))
        return cases

    def statement_universe(self) -> frozenset[NodeKey]:
        """All statements in non-test files."""
        return frozenset((ast.path, s.id) for ast in self.src_asts for s in ast.statements())

    def run_test(
        self,
        case: TestCase,
        budget: int = DEFAULT_BUDGET,
        trace: bool = False,
        force: Optional[ForceFn] = None,
        watch: Optional[set[NodeKey]] = None,
    ) -> RunResult:
        interp = Interpreter([], budget=budget, trace=trace, force=force, watch=watch,
                             functions=self._tables[case.path])
        return interp.run(case.entry)


def as_parsed(project: Union[Project, ParsedProject]) -> ParsedProject:
    if isinstance(project, ParsedProject):
        return project
    return ParsedProject.from_project(project)


class Status(str, enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"


@dataclass(frozen=True)
class TestResult:
    test: str
    status: Status
    steps: int
    covered: frozenset[NodeKey]
    error: Optional[MiniRuntimeError] = None

    __test__ = False

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS

    @classmethod
    def from_run(cls, case: TestCase, run: RunResult) -> "TestResult":
        status = Status.PASS if run.passed else Status.FAIL
        return cls(case.id, status, run.steps, run.covered, run.error)


@dataclass
class SuiteReport:
    results: list[TestResult]
    wall_time: float = 0.0

    @property
    def passed(self) -> int:
        return sum(1 for r in self.results if r.passed)

    @property
    def failed(self) -> int:
        return len(self.results) - self.passed

    @property
    def failing(self) -> list[str]:
        return [r.test for r in self.results if not r.passed]

    @property
    def all_passed(self) -> bool:
        return self.failed == 0

    def result(self, test_id: str) -> TestResult:
        for r in self.results:
            if r.test == test_id:
                return r
        raise KeyError(test_id)

    def same_outcomes(self, other: "SuiteReport") -> bool:
        return [(r.test, r.status, r.steps, r.covered, r.error) for r in self.results] == [
            (r.test, r.status, r.steps, r.covered, r.error) for r in other.results
        ]


def discover(project: Union[Project, ParsedProject]) -> list[TestCase]:
    """Zero-argument ``test_*`` functions of the test files in (path, offset) order."""
    return list(as_parsed(project).tests)


def run_suite(
    project: Union[Project, ParsedProject],
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
    tests: Optional[Iterable[TestCase]] = None,
) -> SuiteReport:
    """Run every test in a fresh interpreter; raises ``CompileError`` first if any file fails to parse."""
    parsed = as_parsed(project)
    cases = list(parsed.tests if tests is None else tests)
    start = time.perf_counter()

    def one(case: TestCase) -> TestResult:
        return TestResult.from_run(case, parsed.run_test(case, budget))

    if workers > 1 and len(cases) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, cases))
    else:
        results = [one(c) for c in cases]
    return SuiteReport(results=results, wall_time=time.perf_counter() - start)
