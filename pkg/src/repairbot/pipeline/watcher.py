"""The inbox watcher: polls for new builds and feeds the work queue."""

from __future__ import annotations

import json
import logging
import os
import shutil
import sys
from concurrent.futures import Future, ThreadPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Optional, TextIO

from .clock import Clock
from .ledger import Ledger
from .review import ReviewQueue
from .worker import BuildResult, process_build

if TYPE_CHECKING:  # config imports the pipeline package
    from ..config import Config

log = logging.getLogger(__name__)

LOCK_FILE = "watch.lock"
BUILDS_DIR = "builds"
DUPLICATES_DIR = "duplicates"


class WatchLocked(RuntimeError):
    pass


def _alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


class WatchLock:
    """One watch process per state directory; stale locks of dead processes are taken over."""

    def __init__(self, state_dir: Path):
        self.path = Path(state_dir) / LOCK_FILE
        self.held = False

    def acquire(self) -> None:
        for _ in range(2):
            try:
                fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                try:
                    pid = int(self.path.read_text().strip() or 0)
                except (OSError, ValueError):
                    pid = 0
                if pid and _alive(pid):
                    raise WatchLocked(f"{self.path} is held by process {pid}") from None
                self.path.unlink(missing_ok=True)
                continue
            with os.fdopen(fd, "w") as fh:
                fh.write(f"{os.getpid()}\n")
            self.held = True
            return
        raise WatchLocked(f"could not acquire {self.path}")

    def release(self) -> None:
        if self.held:
            self.path.unlink(missing_ok=True)
            self.held = False

    def __enter__(self):
        self.acquire()
        return self

    def __exit__(self, *exc):
        self.release()


def json_emitter(stream: TextIO = sys.stdout) -> Callable[[dict], None]:
    def emit(event: dict) -> None:
        stream.write(json.dumps(event, sort_keys=True) + "\n")
        stream.flush()

    return emit


class Watcher:
    """Polls ``inbox/<build-id>/`` directories.

    Accepted builds are moved to ``<state>/builds/<id>`` and processed by a
    pool of workers; results are committed to the ledger and review queue by
    this object alone, in the order the builds were enqueued.
    """

    def __init__(self, config: Config, clock: Clock, emit: Optional[Callable[[dict], None]] = None):
        self.config = config
        self.clock = clock
        self.emit = emit or json_emitter()
        self.ledger = Ledger(config.state_dir)
        self.queue = ReviewQueue(config.state_dir)
        self.polls = 0
        self._pool: Optional[ThreadPoolExecutor] = None
        self._inflight: list[tuple[str, Future]] = []

    # -- single writer -----------------------------------------------------------

    def _commit(self, result: BuildResult) -> None:
        for p in result.proposals:
            self.queue.add(p)
        if result.proposals:
            self.queue.save()
        self.ledger.commit(result.events)
        for event in result.events:
            self.emit(event)

    def _drain(self) -> None:
        while self._inflight:
            build_id, future = self._inflight[0]
            try:
                result = future.result()
            except Exception as exc:  # a worker bug is recorded, the watcher keeps going
                log.exception("worker failed on %s", build_id)
                result = BuildResult(build_id)
                result.add("crash", reason=f"{type(exc).__name__}: {exc}")
                result.add("processed")
            self._inflight.pop(0)
            self._commit(result)

    # -- polling -------------------------------------------------------------------

    def _candidates(self) -> list[Path]:
        inbox = self.config.inbox_dir
        if not inbox.is_dir():
            return []
        return sorted((p for p in inbox.iterdir() if p.is_dir() and not p.name.startswith(".")), key=lambda p: p.name)

    def _dedup(self, build_dir: Path) -> None:
        dest_root = self.config.state_dir / DUPLICATES_DIR
        k = 1
        while (dest := dest_root / f"{build_dir.name}.{k}").exists():
            k += 1
        dest_root.mkdir(parents=True, exist_ok=True)
        shutil.move(str(build_dir), dest)
        event = {"event": "dedup", "build": build_dir.name, "detected_at": self.clock.now().isoformat()}
        self.ledger.commit([event])
        self.emit(event)

    def _recover(self) -> None:
        """Return builds accepted by an interrupted run, but never committed, to the inbox."""
        accepted = self.config.state_dir / BUILDS_DIR
        if not accepted.is_dir():
            return
        done = self.ledger.processed()
        for d in sorted(accepted.iterdir()):
            back = self.config.inbox_dir / d.name
            if d.is_dir() and d.name not in done and not back.exists():
                back.parent.mkdir(parents=True, exist_ok=True)
                shutil.move(str(d), back)

    def poll(self) -> int:
        """Enqueue every new build, wait for the batch, commit it; returns the count."""
        self.polls += 1
        seen = self.ledger.processed() | {b for b, _ in self._inflight}
        enqueued = 0
        for build_dir in self._candidates():
            if build_dir.name in seen:
                self._dedup(build_dir)
                continue
            dest = self.config.state_dir / BUILDS_DIR / build_dir.name
            if dest.exists():
                shutil.rmtree(dest)  # leftover of an interrupted run that never committed
            dest.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(build_dir), dest)
            future = self._pool.submit(process_build, build_dir.name, dest, self.config.repair_config(), self.clock.fork())
            self._inflight.append((build_dir.name, future))
            seen.add(build_dir.name)
            enqueued += 1
        if not enqueued:
            self.emit({"event": "heartbeat", "poll": self.polls, "at": self.clock.now().isoformat()})
        self._drain()
        return enqueued

    def run(self, max_polls: Optional[int] = None) -> int:
        """Poll until interrupted or ``max_polls`` is reached; returns builds processed."""
        self.config.ensure_dirs()
        processed = 0
        with WatchLock(self.config.state_dir), ThreadPoolExecutor(self.config.workers) as pool:
            self._pool = pool
            self._recover()
            self.emit({"event": "start", "workers": self.config.workers, "inbox": str(self.config.inbox_dir)})
            reason = "done"
            try:
                while max_polls is None or self.polls < max_polls:
                    processed += self.poll()
                    if max_polls is None or self.polls < max_polls:
                        self.clock.sleep(self.config.poll_secs)
            except KeyboardInterrupt:
                reason = "interrupt"
                self._drain()
            finally:
                self._pool = None
            self.emit({"event": "shutdown", "reason": reason, "processed": len(self.ledger.processed())})
        return processed
