"""``repairbot`` command line: repair, watch, review and stats."""

from __future__ import annotations

import argparse
import json
import signal
import sys
from pathlib import Path
from typing import Mapping, Optional, Sequence, TextIO

from .config import Config, ConfigError, load_config
from .patch import ENGINE_ORDER
from .pipeline.builds import FailureKind
from .pipeline.clock import Clock, SystemClock
from .pipeline.ledger import Ledger
from .pipeline.review import ProposalStatus, ReviewError, ReviewQueue, emit_proposal
from .pipeline.stats import record_stats, render_table
from .pipeline.watcher import Watcher, WatchLocked, json_emitter
from .pipeline.worker import BuildResult, process_build
from .testkit import ManifestError, Project

EXIT_OK, EXIT_ERROR, EXIT_NO_PATCH = 0, 1, 2

RANKING_NOTE = (
    "ranking: smaller diff first, ties by engine order "
    + ", ".join(e.value for e in ENGINE_ORDER)
    + " (a heuristic; pick the patch you trust)"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--state", help="state directory (default: ./state)")
    common.add_argument("--inbox", help="build inbox directory (default: ./inbox)")
    common.add_argument("--proposals", help="proposal output directory (default: <state>/proposals)")
    common.add_argument("--engines", help="comma-separated subset of nopol,npefix,genprog")
    common.add_argument("--budget-engine-secs", type=float, help="wall-clock budget per engine")
    common.add_argument("--seed", type=int, help="GenProg seed")
    common.add_argument("--workers", type=int, help="watch worker threads")
    common.add_argument("--poll-secs", type=float, help="inbox poll interval")
    common.add_argument("--max-diff-lines", type=int, help="sanity-check diff size limit")

    parser = _Parser(prog="repairbot", description="Program-repair bot for .mini projects.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("repair", parents=[common], help="repair one project directory")
    p.add_argument("project", type=Path)

    p = sub.add_parser("watch", parents=[common], help="watch the inbox and process new builds")
    p.add_argument("--once", action="store_true", help="poll once and exit")
    p.add_argument("--max-polls", type=int, help="exit after this many polls")

    p = sub.add_parser("review", parents=[common], help="review drafted proposals")
    actions = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    actions.add_parser("list", help="pending proposals")
    actions.add_parser("show").add_argument("id")
    a = actions.add_parser("approve")
    a.add_argument("id")
    a.add_argument("--note", default="")
    r = actions.add_parser("reject")
    r.add_argument("id")
    r.add_argument("--note", required=True)

    p = sub.add_parser("stats", parents=[common], help="print expedition statistics")
    p.add_argument("--format", choices=("table", "json"), default="table")
    return parser


def _flags(args: argparse.Namespace) -> dict:
    return {
        "state": args.state,
        "inbox": args.inbox,
        "proposals": args.proposals,
        "engines": args.engines,
        "budget_engine_secs": args.budget_engine_secs,
        "seed": args.seed,
        "workers": args.workers,
        "poll_secs": args.poll_secs,
        "max_diff_lines": args.max_diff_lines,
    }


# -- commands --------------------------------------------------------------------


def _local_build_id(ledger: Ledger, name: str) -> str:
    prefix = f"local-{name}-"
    taken = {e["build"] for e in ledger.events if e.get("build", "").startswith(prefix)}
    k = 1
    while f"{prefix}{k}" in taken:
        k += 1
    return f"{prefix}{k}"


def _print_result(result: BuildResult, out: TextIO) -> None:
    attempt = result.attempt
    for o in attempt.outcomes:
        out.write(f"{o.engine.value}: {o.status.value} ({o.detail})\n")
    for patch, verdict in result.verdicts:
        out.write(f"\n== {patch.engine.value} patch, {patch.size} changed lines, sanity {verdict}\n")
        if verdict.detail:
            out.write(f"   {verdict.detail}\n")
        out.write(f"   {patch.summary}\n")
        out.write(patch.diff)
    for p in result.proposals:
        out.write(f"\nqueued {p.id} for review (rank {p.rank}/{p.of})\n")


def cmd_repair(config: Config, project_dir: Path, clock: Clock, out: TextIO, err: TextIO) -> int:
    try:
        project = Project.load(project_dir)
    except ManifestError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR
    config.ensure_dirs()
    ledger = Ledger(config.state_dir)
    build_id = _local_build_id(ledger, project.name)
    result = process_build(build_id, Path(project_dir), config.repair_config(), clock)
    if result.analysis_kind is None and result.error is None:
        ledger.commit(result.events)
        out.write("build is successful; nothing to repair\n")
        return EXIT_NO_PATCH
    if result.analysis_kind is FailureKind.COMPILE_ERROR or result.error:
        ledger.commit(result.events)
        err.write(f"error: {result.error}\n")
        return EXIT_ERROR
    queue = ReviewQueue(config.state_dir)
    for p in result.proposals:
        queue.add(p)
    queue.save()
    ledger.commit(result.events)
    if result.attempt is None:
        out.write("failure not reproduced locally; nothing to repair\n")
        return EXIT_NO_PATCH
    out.write(f"build {build_id}: failing {', '.join(result.failing)}\n")
    _print_result(result, out)
    if not result.attempt.patches:
        out.write("no patch found\n")
        return EXIT_NO_PATCH
    return EXIT_OK


def cmd_watch(config: Config, clock: Clock, max_polls: Optional[int], out: TextIO) -> int:
    watcher = Watcher(config, clock, json_emitter(out))
    previous = None
    try:
        previous = signal.signal(signal.SIGTERM, signal.default_int_handler)
    except ValueError:  # not in the main thread
        pass
    try:
        watcher.run(max_polls)
    finally:
        if previous is not None:
            signal.signal(signal.SIGTERM, previous)
    return EXIT_OK


def cmd_review(config: Config, args: argparse.Namespace, clock: Clock, out: TextIO) -> int:
    queue = ReviewQueue(config.state_dir)
    ledger = Ledger(config.state_dir)
    if args.action == "list":
        pending = queue.pending()
        if not pending:
            out.write("no pending proposals\n")
            return EXIT_OK
        for p in pending:
            added = sum(1 for l in p.diff.splitlines() if l.startswith("+") and not l.startswith("+++ "))
            removed = sum(1 for l in p.diff.splitlines() if l.startswith("-") and not l.startswith("--- "))
            out.write(f"{p.id}  {p.engine.value}  +{added} -{removed}  rank {p.rank}/{p.of}  {p.patch['summary']}\n")
        out.write(RANKING_NOTE + "\n")
        return EXIT_OK

    p = queue.get(args.id)
    if args.action == "show":
        out.write(f"id: {p.id}\nstatus: {p.status.value}\nrank: {p.rank}/{p.of}\n")
        if p.note:
            out.write(f"note: {p.note}\n")
        out.write("\n" + p.message + "\n" + p.diff)
        return EXIT_OK
    if args.action == "approve":
        queue.approve(p.id, args.note)
        dest = emit_proposal(p, config.proposals, clock)
        queue.save()
        ledger.commit([
            {"event": "review", "proposal": p.id, "status": ProposalStatus.APPROVED.value, "note": p.note},
            {"event": "review", "proposal": p.id, "status": p.status.value, "path": str(dest),
             "timeline": p.timeline.to_json()},
        ])
        out.write(f"{p.id} submitted: {dest}\n")
        return EXIT_OK
    queue.reject(p.id, args.note)
    queue.save()
    ledger.commit([{"event": "review", "proposal": p.id, "status": p.status.value, "note": p.note}])
    out.write(f"{p.id} rejected\n")
    return EXIT_OK


def cmd_stats(config: Config, fmt: str, out: TextIO) -> int:
    report = record_stats(Ledger(config.state_dir).events)
    if fmt == "json":
        out.write(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    else:
        out.write(render_table(report))
    return EXIT_OK


def main(
    argv: Optional[Sequence[str]] = None,
    clock: Optional[Clock] = None,
    env: Optional[Mapping[str, str]] = None,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    clock = clock or SystemClock()
    try:
        args = build_parser().parse_args(argv)
        config = load_config(_flags(args), env)
        if args.command == "repair":
            return cmd_repair(config, args.project, clock, out, err)
        if args.command == "watch":
            if args.max_polls is not None and args.max_polls < 1:
                raise UsageError("--max-polls must be at least 1")
            return cmd_watch(config, clock, 1 if args.once else args.max_polls, out)
        if args.command == "review":
            return cmd_review(config, args, clock, out)
        return cmd_stats(config, args.format, out)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_ERROR
    except (ConfigError, WatchLocked, ReviewError) as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
