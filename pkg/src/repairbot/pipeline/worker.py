"""Processing one build end to end; results are committed by a single writer."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..patch import Patch
from ..testkit import Project
from .builds import Build, FailureKind, MalformedLog, SnapshotInvalid, analyze_log, reproduce
from .clock import Clock
from .repair import RepairAttempt, RepairConfig, attempt_repair
from .review import Proposal, make_proposals, proposal_id
from .sanity import SanityVerdict, sanity_check


@dataclass
class BuildResult:
    build: str
    events: list[dict] = field(default_factory=list)
    proposals: list[Proposal] = field(default_factory=list)
    attempt: Optional[RepairAttempt] = None
    verdicts: list[tuple[Patch, SanityVerdict]] = field(default_factory=list)
    analysis_kind: Optional[FailureKind] = None
    failing: tuple[str, ...] = ()
    error: Optional[str] = None

    def add(self, event: str, **data) -> None:
        self.events.append({"event": event, "build": self.build, **data})


def _iso(t) -> Optional[str]:
    return t.isoformat() if t else None


def _project_name(directory: Path) -> str:
    try:
        return json.loads((directory / "project.json").read_text(encoding="utf-8"))["name"]
    except (OSError, ValueError, KeyError, TypeError):
        return directory.name


def process_build(build_id: str, directory: Path, config: RepairConfig, clock: Clock) -> BuildResult:
    """Analyze, reproduce, repair and sanity-check one build.

    Never raises for problems with the build itself; those become events.
    """
    result = BuildResult(build_id)
    detected = clock.now()
    project = _project_name(directory)
    try:
        build = Build.load(directory, detected, config.step_budget)
        analysis = analyze_log(build.log)
    except MalformedLog as exc:
        result.error = f"MalformedLog: {exc}"
        result.add("invalid", reason=result.error, detected_at=_iso(detected))
        result.add("processed")
        return result
    build = dataclasses.replace(build, id=build_id)
    result.add(
        "build", project=project, outcome=build.outcome.value,
        created_at=_iso(build.created_at), detected_at=_iso(detected),
    )
    result.analysis_kind = analysis.kind
    result.add(
        "analysis", kind=analysis.kind.value if analysis.kind else None,
        failing=list(analysis.failing), error_kinds=[k.value for k in analysis.error_kinds],
    )
    if analysis.kind is not FailureKind.TEST_FAILURE:
        if analysis.kind is FailureKind.COMPILE_ERROR:
            result.error = f"CompileError: {analysis.compile_message}"
        result.add("processed")
        return result

    try:
        repro = reproduce(build, analysis, config.step_budget)
    except SnapshotInvalid as exc:
        result.error = f"SnapshotInvalid: {exc}"
        result.add("invalid", reason=result.error, detected_at=_iso(detected))
        result.add("processed")
        return result
    result.add("reproduction", status=repro.status.value, observed=list(repro.observed_failing), reason=repro.reason)
    result.failing = repro.observed_failing
    if not repro.reproduced:
        result.add("processed")
        return result

    attempt = attempt_repair(build, repro, config, clock, detected)
    result.attempt = attempt
    result.add(
        "attempt", started_at=_iso(attempt.started), finished_at=_iso(attempt.finished),
        patches=len(attempt.patches),
        engines=[{"engine": o.engine.value, "status": o.status.value, "detail": o.detail} for o in attempt.outcomes],
    )
    snapshot = Project.load(directory)
    accepted = []
    for patch in attempt.patches:
        verdict = sanity_check(patch, snapshot, config.max_diff_lines, config.step_budget)
        result.verdicts.append((patch, verdict))
        result.add(
            "patch", proposal=proposal_id(build_id, patch.engine), engine=patch.engine.value,
            verdict="Ok" if verdict.ok else "Reject", reason=verdict.reason.value if verdict.reason else None,
            detail=verdict.detail, size=patch.size, summary=patch.summary, timeline=patch.timeline.to_json(),
        )
        if verdict.ok:
            accepted.append(patch)
    result.proposals = make_proposals(project, build_id, accepted)
    for p in result.proposals:
        result.events.append({"event": "proposal", "build": build_id, "proposal": p.id, "status": p.status.value,
                              "rank": p.rank, "of": p.of})
    result.add("processed")
    return result
