"""Expedition statistics aggregated from ledger events."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Iterable, Optional, Sequence

from .review import ProposalStatus

SECONDS_PER_DAY = 86_400.0
PERCENTILES = (50, 90, 100)


def nearest_rank(values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile; 0.0 for an empty sample."""
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(pct / 100 * len(ordered)))
    return ordered[rank - 1]


@dataclass(frozen=True)
class Latency:
    count: int = 0
    p50: float = 0.0
    p90: float = 0.0
    max: float = 0.0

    @classmethod
    def of(cls, seconds: Sequence[float]) -> "Latency":
        return cls(len(seconds), *(nearest_rank(seconds, p) for p in PERCENTILES))


@dataclass(frozen=True)
class StatsReport:
    builds_seen: int = 0
    failed_builds: int = 0
    failure_rate: float = 0.0
    compile_errors: int = 0
    test_failures: int = 0
    reproduced: int = 0
    reproduction_rate: float = 0.0
    repair_attempts: int = 0
    window_seconds: float = 0.0
    attempts_per_day: float = 0.0
    patches_drafted: int = 0
    sanity_ok: int = 0
    proposals: dict = field(default_factory=lambda: {s.value: 0 for s in ProposalStatus})
    detection_latency: Latency = Latency()
    repair_latency: Latency = Latency()

    def to_json(self) -> dict:
        return asdict(self)


def _ts(value: Optional[str]) -> Optional[datetime]:
    return datetime.fromisoformat(value) if value else None


def _ratio(a: int, b: int) -> float:
    return a / b if b else 0.0


def record_stats(events: Iterable[dict]) -> StatsReport:
    """Aggregate counts, rates and latencies.

    The observation window runs from the first build detection to the last
    recorded activity; attempts per day extrapolate the attempt count over
    that window (zero for an empty window).
    """
    builds = attempts = failed = compile_errors = test_failures = reproduced = 0
    drafted = sanity_ok = 0
    stamps: list[datetime] = []
    detection: list[float] = []
    repair: list[float] = []
    status: dict[str, str] = {}
    for e in events:
        kind = e["event"]
        if kind == "build":
            builds += 1
            failed += e["outcome"] == "Failure"
            detected, created = _ts(e.get("detected_at")), _ts(e.get("created_at"))
            if detected:
                stamps.append(detected)
                if created:
                    detection.append((detected - created).total_seconds())
        elif kind == "analysis":
            compile_errors += e["kind"] == "CompileError"
            test_failures += e["kind"] == "TestFailure"
        elif kind == "reproduction":
            reproduced += e["status"] == "Reproduced"
        elif kind == "attempt":
            attempts += 1
            stamps += [t for t in (_ts(e.get("started_at")), _ts(e.get("finished_at"))) if t]
        elif kind == "patch":
            drafted += 1
            sanity_ok += e["verdict"] == "Ok"
            timeline = e.get("timeline", {})
            found, started = _ts(timeline.get("patch_found")), _ts(timeline.get("repair_started"))
            if found and started:
                repair.append((found - started).total_seconds())
        elif kind in ("proposal", "review"):
            status[e["proposal"]] = e["status"]

    window = (max(stamps) - min(stamps)).total_seconds() if stamps else 0.0
    proposals = {s.value: 0 for s in ProposalStatus}
    for s in status.values():
        proposals[s] += 1
    return StatsReport(
        builds_seen=builds,
        failed_builds=failed,
        failure_rate=_ratio(failed, builds),
        compile_errors=compile_errors,
        test_failures=test_failures,
        reproduced=reproduced,
        reproduction_rate=_ratio(reproduced, test_failures),
        repair_attempts=attempts,
        window_seconds=window,
        attempts_per_day=attempts / (window / SECONDS_PER_DAY) if window > 0 else 0.0,
        patches_drafted=drafted,
        sanity_ok=sanity_ok,
        proposals=proposals,
        detection_latency=Latency.of(detection),
        repair_latency=Latency.of(repair),
    )


def render_table(report: StatsReport) -> str:
    def secs(lat: Latency) -> str:
        return f"p50 {lat.p50:.1f}s, p90 {lat.p90:.1f}s, max {lat.max:.1f}s (n={lat.count})"

    rows = [
        ("builds seen", str(report.builds_seen)),
        ("failed builds", str(report.failed_builds)),
        ("failure rate", f"{report.failure_rate * 100:.1f}%"),
        ("compile errors", str(report.compile_errors)),
        ("test failures", str(report.test_failures)),
        ("reproduced", str(report.reproduced)),
        ("reproduction rate", f"{report.reproduction_rate * 100:.1f}%"),
        ("repair attempts", str(report.repair_attempts)),
        ("window", f"{report.window_seconds / 3600:.2f} h"),
        ("attempts/day", f"{report.attempts_per_day:.1f}"),
        ("patches drafted", str(report.patches_drafted)),
        ("sanity ok", str(report.sanity_ok)),
    ]
    rows += [(f"proposals {k.lower()}", str(v)) for k, v in report.proposals.items()]
    rows += [
        ("detection latency", secs(report.detection_latency)),
        ("repair latency", secs(report.repair_latency)),
    ]
    return "".join(f"{k}: {v}\n" for k, v in rows)
