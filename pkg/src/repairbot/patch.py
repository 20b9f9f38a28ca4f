"""Patches: edit scripts over a project, their unified diffs, and timelines."""

from __future__ import annotations

import difflib
import enum
import re
from dataclasses import dataclass, field, fields
from datetime import datetime
from typing import Mapping, Optional

from .minilang import Ast, Edit, apply_by_origin, pretty, pretty_expr, pretty_stmt
from .minilang import nodes as n
from .testkit import ParsedProject

NO_EOL = "\\ No newline at end of file"


class Engine(str, enum.Enum):
    NOPOL = "Nopol"
    NPEFIX = "NpeFix"
    GENPROG = "GenProg"

    def __str__(self):
        return self.value


ENGINE_ORDER = (Engine.NOPOL, Engine.NPEFIX, Engine.GENPROG)


@dataclass
class Timeline:
    build_created: Optional[datetime] = None
    detected: Optional[datetime] = None
    repair_started: Optional[datetime] = None
    patch_found: Optional[datetime] = None
    proposed: Optional[datetime] = None

    def stamps(self) -> list[tuple[str, datetime]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self) if getattr(self, f.name) is not None]

    def is_monotone(self) -> bool:
        times = [t for _, t in self.stamps()]
        return all(a <= b for a, b in zip(times, times[1:]))

    def to_json(self) -> dict:
        return {f.name: (v.isoformat() if (v := getattr(self, f.name)) else None) for f in fields(self)}

    @classmethod
    def from_json(cls, data: Mapping) -> "Timeline":
        return cls(**{k: datetime.fromisoformat(v) if v else None for k, v in data.items()})


@dataclass
class Patch:
    engine: Engine
    edits: tuple[Edit, ...]
    diff: str
    patched_sources: dict[str, str]
    fixed_tests: list[str]
    summary: str
    timeline: Timeline = field(default_factory=Timeline)
    details: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return changed_lines(self.diff)

    def to_json(self) -> dict:
        return {
            "engine": self.engine.value,
            "edits": [describe_edit(e) for e in self.edits],
            "diff": self.diff,
            "patched_sources": self.patched_sources,
            "fixed_tests": self.fixed_tests,
            "summary": self.summary,
            "timeline": self.timeline.to_json(),
            "details": self.details,
        }


def describe_edit(edit: Edit) -> dict:
    payload = None
    if isinstance(edit.payload, n.Stmt):
        payload = pretty_stmt(edit.payload)
    elif isinstance(edit.payload, n.Expr):
        payload = pretty_expr(edit.payload)
    return {"kind": edit.kind.value, "path": edit.path, "target": edit.target, "payload": payload}


def apply_edits(parsed: ParsedProject, edits: tuple[Edit, ...]) -> dict[str, Ast]:
    """Apply origin-addressed edits in order; returns only the changed ASTs."""
    changed: dict[str, Ast] = {}
    for edit in edits:
        ast = changed.get(edit.path, parsed.asts[edit.path])
        changed[edit.path] = apply_by_origin(ast, edit)
    return changed


def patched_project(parsed: ParsedProject, edits: tuple[Edit, ...]) -> ParsedProject:
    return parsed.with_asts(apply_edits(parsed, edits))


def render(parsed: ParsedProject, edits: tuple[Edit, ...]) -> tuple[dict[str, str], str]:
    """Patched file texts (pretty-printed) and the unified diff against the snapshot."""
    sources = {path: pretty(ast) for path, ast in sorted(apply_edits(parsed, edits).items())}
    chunks = [unified_diff(parsed.project.text_of(path), text, path) for path, text in sources.items()]
    return sources, "".join(chunks)


# -- unified diffs ------------------------------------------------------------


def _diff_lines(lines):
    for line in lines:
        if line.endswith("\n"):
            yield line
        else:
            yield line + "\n"
            yield NO_EOL + "\n"


def unified_diff(old: str, new: str, path: str, context: int = 3) -> str:
    if old == new:
        return ""
    lines = difflib.unified_diff(
        old.splitlines(keepends=True), new.splitlines(keepends=True), fromfile=path, tofile=path, n=context
    )
    return "".join(_diff_lines(lines))


class DiffApplyError(ValueError):
    pass


_HUNK = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def parse_diff(diff: str) -> dict[str, list[tuple[int, list[str]]]]:
    """Split a multi-file diff into {path: [(old_start, hunk body lines)]}."""
    files: dict[str, list] = {}
    current: Optional[list] = None
    lines = diff.splitlines(keepends=True)
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- ") and i + 1 < len(lines) and lines[i + 1].startswith("+++ "):
            path = lines[i + 1][4:].rstrip("\n").split("\t")[0]
            current = files.setdefault(path, [])
            i += 2
            continue
        m = _HUNK.match(line)
        if m:
            if current is None:
                raise DiffApplyError("hunk before file header")
            current.append((int(m.group(1)), []))
        elif current and current[-1] is not None and line[:1] in (" ", "-", "+", "\\"):
            current[-1][1].append(line)
        elif line.strip():
            raise DiffApplyError(f"unexpected diff line: {line!r}")
        i += 1
    return files


def _strip_eol_markers(body: list[str]) -> list[str]:
    out: list[str] = []
    for line in body:
        if line.startswith("\\"):
            if out:
                out[-1] = out[-1][:-1] if out[-1].endswith("\n") else out[-1]
            continue
        out.append(line)
    return out


def apply_hunks(old: str, hunks: list[tuple[int, list[str]]]) -> str:
    src = old.splitlines(keepends=True)
    out: list[str] = []
    pos = 0
    for start, body in hunks:
        body = _strip_eol_markers(body)
        begin = start - 1 if start > 0 else 0
        if begin < pos:
            raise DiffApplyError("overlapping hunks")
        out.extend(src[pos:begin])
        pos = begin
        for line in body:
            tag, text = line[0], line[1:]
            if tag in (" ", "-"):
                if pos >= len(src) or src[pos] != text:
                    raise DiffApplyError(f"context mismatch at line {pos + 1}")
                pos += 1
                if tag == " ":
                    out.append(text)
            else:
                out.append(text)
    out.extend(src[pos:])
    return "".join(out)


def apply_diff(diff: str, sources: Mapping[str, str]) -> dict[str, str]:
    """Apply ``diff`` to ``sources``; returns the new texts of the touched files."""
    result = {}
    for path, hunks in parse_diff(diff).items():
        if path not in sources:
            raise DiffApplyError(f"diff touches unknown file {path}")
        result[path] = apply_hunks(sources[path], hunks)
    return result


def changed_lines(diff: str) -> int:
    count = 0
    for line in diff.splitlines():
        if line.startswith(("+++ ", "--- ")):
            continue
        if line[:1] in ("+", "-"):
            count += 1
    return count
