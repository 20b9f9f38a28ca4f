"""Running the enabled engines on a reproduced build."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional

from ..engines import genprog, nopol, npefix
from ..engines.common import Deadline, EngineBudgetExceeded, NoFixFound
from ..faultloc import DEFAULT_TOP_K, localize
from ..minilang.interp import DEFAULT_BUDGET
from ..patch import ENGINE_ORDER, Engine, Patch, Timeline
from ..testkit import ParsedProject, Project, run_suite
from .builds import Build, ReproductionResult
from .clock import Clock

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RepairConfig:
    engines: tuple[Engine, ...] = ENGINE_ORDER
    engine_budget_secs: float = 120.0
    build_budget_secs: float = 600.0
    step_budget: int = DEFAULT_BUDGET
    seed: int = 42
    top_k: int = DEFAULT_TOP_K
    max_diff_lines: int = 50


class EngineStatus(str, enum.Enum):
    PATCH = "patch"
    ABSTAIN = "abstain"
    TIMEOUT = "timeout"
    CRASH = "crash"


@dataclass(frozen=True)
class EngineOutcome:
    engine: Engine
    status: EngineStatus
    detail: str
    seconds: float


@dataclass
class RepairAttempt:
    build: str
    patches: list[Patch]
    outcomes: list[EngineOutcome]
    started: datetime
    finished: datetime


EngineRunner = Callable[[ParsedProject, RepairConfig, Deadline], Patch]


def _run_nopol(parsed: ParsedProject, config: RepairConfig, deadline: Deadline) -> Patch:
    report = run_suite(parsed, config.step_budget)
    return nopol.repair(parsed, report, localize(parsed, report), config.step_budget, deadline, config.top_k)


def _run_npefix(parsed: ParsedProject, config: RepairConfig, deadline: Deadline) -> Patch:
    report = run_suite(parsed, config.step_budget)
    traces = npefix.collect_traces(parsed, report, config.step_budget)
    return npefix.repair(parsed, report, npefix.diagnose(parsed, report, traces), config.step_budget, deadline)


def _run_genprog(parsed: ParsedProject, config: RepairConfig, deadline: Deadline) -> Patch:
    report = run_suite(parsed, config.step_budget)
    search = genprog.SearchConfig(seed=config.seed, top_k=config.top_k, step_budget=config.step_budget)
    return genprog.search(parsed, report, localize(parsed, report), search, deadline)


RUNNERS: dict[Engine, EngineRunner] = {
    Engine.NOPOL: _run_nopol,
    Engine.NPEFIX: _run_npefix,
    Engine.GENPROG: _run_genprog,
}


def attempt_repair(
    build: Build,
    reproduction: ReproductionResult,
    config: RepairConfig,
    clock: Clock,
    detected: Optional[datetime] = None,
) -> RepairAttempt:
    """Run each enabled engine on its own copy of the snapshot.

    Engines that abstain, time out or crash contribute no patch; the attempt
    itself never fails.
    """
    if not reproduction.reproduced:
        raise ValueError("attempt_repair needs a reproduced build")
    started = clock.now()
    build_deadline = Deadline(config.build_budget_secs)
    patches: list[Patch] = []
    outcomes: list[EngineOutcome] = []
    for engine in sorted(config.engines, key=ENGINE_ORDER.index):
        t0 = time.monotonic()
        seconds = min(config.engine_budget_secs, build_deadline.remaining())
        if seconds <= 0:
            outcomes.append(EngineOutcome(engine, EngineStatus.TIMEOUT, "build budget exhausted", 0.0))
            continue
        engine_started = clock.now()
        try:
            # a private copy: engines never share parsed state
            parsed = ParsedProject.from_project(Project.load(Path(build.snapshot)))
            patch = RUNNERS[engine](parsed, config, Deadline(seconds))
        except EngineBudgetExceeded as exc:
            status, detail, patch = EngineStatus.TIMEOUT, str(exc), None
        except NoFixFound as exc:
            status, detail, patch = EngineStatus.ABSTAIN, str(exc), None
        except Exception as exc:  # an engine bug must not abort the build
            log.exception("%s crashed on %s", engine, build.id)
            status, detail, patch = EngineStatus.CRASH, f"{type(exc).__name__}: {exc}", None
        else:
            status, detail = EngineStatus.PATCH, patch.summary
            patch.timeline = Timeline(
                build_created=build.created_at,
                detected=detected,
                repair_started=engine_started,
                patch_found=clock.now(),
            )
            patches.append(patch)
        outcomes.append(EngineOutcome(engine, status, detail, time.monotonic() - t0))
    return RepairAttempt(build.id, patches, outcomes, started, clock.now())
