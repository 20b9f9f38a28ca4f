"""The repair-bot workflow: builds in, reviewed patch proposals out."""

from .builds import (
    Build,
    BuildAnalysis,
    FailureKind,
    MalformedLog,
    Outcome,
    ReproductionResult,
    ReproStatus,
    SnapshotInvalid,
    analyze_log,
    format_log,
    reproduce,
    run_build,
)
from .clock import Clock, FakeClock, SystemClock
from .ledger import Ledger
from .repair import EngineOutcome, EngineStatus, RepairAttempt, RepairConfig, attempt_repair
from .review import (
    TRANSITIONS,
    IllegalTransition,
    Proposal,
    ProposalExists,
    ProposalStatus,
    ReviewQueue,
    UnknownProposal,
    emit_proposal,
    make_proposals,
    rank_patches,
)
from .sanity import RejectReason, SanityVerdict, sanity_check
from .stats import Latency, StatsReport, nearest_rank, record_stats, render_table
from .watcher import WatchLock, WatchLocked, Watcher
from .worker import BuildResult, process_build

__all__ = [
    "Build",
    "BuildAnalysis",
    "BuildResult",
    "Clock",
    "EngineOutcome",
    "EngineStatus",
    "FailureKind",
    "FakeClock",
    "IllegalTransition",
    "Latency",
    "Ledger",
    "MalformedLog",
    "Outcome",
    "Proposal",
    "ProposalExists",
    "ProposalStatus",
    "RejectReason",
    "RepairAttempt",
    "RepairConfig",
    "ReproStatus",
    "ReproductionResult",
    "ReviewQueue",
    "SanityVerdict",
    "SnapshotInvalid",
    "StatsReport",
    "SystemClock",
    "TRANSITIONS",
    "UnknownProposal",
    "WatchLock",
    "WatchLocked",
    "Watcher",
    "analyze_log",
    "attempt_repair",
    "emit_proposal",
    "format_log",
    "make_proposals",
    "nearest_rank",
    "process_build",
    "rank_patches",
    "record_stats",
    "render_table",
    "reproduce",
    "run_build",
    "sanity_check",
]
