import shutil

import pytest

from repairbot.config import Config
from repairbot.pipeline import FakeClock, Ledger, ReviewQueue, WatchLock, WatchLocked, Watcher, record_stats
from repairbot.pipeline import worker as worker_mod

from conftest import FIXTURES, WATCH_START, write_corpus


def setup(tmp_path, workers=1, plan=None):
    inbox = tmp_path / "inbox"
    ids = write_corpus(inbox) if plan is None else write_corpus(inbox, plan)
    config = Config(state_dir=tmp_path / "state", inbox_dir=inbox, workers=workers)
    return config, ids


def watch(config, polls=2, clock=None):
    events = []
    Watcher(config, clock or FakeClock(WATCH_START), events.append).run(max_polls=polls)
    return events


def test_corpus_end_to_end(tmp_path):
    config, ids = setup(tmp_path)
    events = watch(config)
    ledger = Ledger(config.state_dir)
    assert ledger.processed() == set(ids)
    report = record_stats(ledger.events)
    assert report.builds_seen == 8 and report.failure_rate == 0.25
    assert report.reproduced == 2 and report.repair_attempts == 2
    assert report.sanity_ok >= 1
    pending = ReviewQueue(config.state_dir).pending()
    assert {p.build for p in pending} == {"build-03", "build-06"}
    # inbox consumed; the second poll found nothing new
    assert list(config.inbox_dir.iterdir()) == []
    kinds = [e["event"] for e in events]
    assert kinds[0] == "start" and kinds[-1] == "shutdown"
    assert kinds.count("heartbeat") == 1
    assert events[-1]["processed"] == 8


def test_ledger_is_deterministic_across_worker_counts(tmp_path):
    texts = []
    for workers in (1, 4, 4):
        root = tmp_path / f"run{len(texts)}"
        config, _ = setup(root, workers)
        watch(config)
        texts.append((config.state_dir / "ledger.jsonl").read_text())
    assert texts[0] == texts[1] == texts[2]


def test_empty_inbox_heartbeats_only(tmp_path):
    config = Config(state_dir=tmp_path / "state", inbox_dir=tmp_path / "inbox", workers=1)
    events = watch(config, polls=3)
    assert [e["event"] for e in events] == ["start", "heartbeat", "heartbeat", "heartbeat", "shutdown"]
    assert Ledger(config.state_dir).events == []


def test_duplicate_build_id_is_set_aside(tmp_path):
    config, _ = setup(tmp_path, plan=["counter-mini"])
    watch(config, polls=1)
    shutil.copytree(FIXTURES / "greeter-mini", config.inbox_dir / "build-01")
    events = watch(config, polls=1)
    assert [e["event"] for e in events if e["event"] == "dedup"] == ["dedup"]
    assert (config.state_dir / "duplicates" / "build-01.1").is_dir()
    ledger = Ledger(config.state_dir)
    assert len(ledger.of_kind("build")) == 1 and len(ledger.of_kind("dedup")) == 1


class InterruptingClock(FakeClock):
    def sleep(self, seconds):
        raise KeyboardInterrupt


def test_interrupt_drains_and_shuts_down(tmp_path):
    config, ids = setup(tmp_path)
    events = watch(config, polls=None, clock=InterruptingClock(WATCH_START))
    assert events[-1] == {"event": "shutdown", "reason": "interrupt", "processed": 8}
    assert Ledger(config.state_dir).processed() == set(ids)
    assert not (config.state_dir / "watch.lock").exists()


def test_lock_excludes_second_watcher(tmp_path):
    config = Config(state_dir=tmp_path / "state", inbox_dir=tmp_path / "inbox", workers=1)
    config.ensure_dirs()
    with WatchLock(config.state_dir):
        with pytest.raises(WatchLocked):
            watch(config, polls=1)


def test_stale_lock_is_taken_over(tmp_path):
    config = Config(state_dir=tmp_path / "state", inbox_dir=tmp_path / "inbox", workers=1)
    config.ensure_dirs()
    # a pid far above any pid_max cannot belong to a live process
    (config.state_dir / "watch.lock").write_text("999999999\n")
    assert [e["event"] for e in watch(config, polls=1)][-1] == "shutdown"


def test_worker_crash_is_recorded(tmp_path, monkeypatch):
    config, _ = setup(tmp_path, plan=["offby1-mini", "counter-mini"])
    real = worker_mod.process_build

    def flaky(build_id, *args):
        if build_id == "build-01":
            raise RuntimeError("disk on fire")
        return real(build_id, *args)

    monkeypatch.setattr("repairbot.pipeline.watcher.process_build", flaky)
    events = watch(config, polls=1)
    crash = [e for e in events if e["event"] == "crash"]
    assert crash == [{"event": "crash", "build": "build-01", "reason": "RuntimeError: disk on fire"}]
    assert Ledger(config.state_dir).processed() == {"build-01", "build-02"}


def test_uncommitted_builds_are_recovered(tmp_path):
    config, _ = setup(tmp_path, plan=["offby1-mini"])
    # simulate a run that accepted the build and died before committing
    config.ensure_dirs()
    (config.state_dir / "builds").mkdir()
    shutil.move(str(config.inbox_dir / "build-01"), config.state_dir / "builds" / "build-01")
    watch(config, polls=1)
    assert Ledger(config.state_dir).processed() == {"build-01"}
    assert len(ReviewQueue(config.state_dir)) == 1
