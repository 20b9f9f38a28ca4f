import json
import shutil
from datetime import datetime, timezone

import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, precondition, rule

from repairbot.patch import Engine, Patch, Timeline
from repairbot.pipeline import (
    TRANSITIONS,
    Build,
    FakeClock,
    IllegalTransition,
    Proposal,
    ProposalExists,
    ProposalStatus,
    RepairConfig,
    ReviewQueue,
    UnknownProposal,
    analyze_log,
    attempt_repair,
    emit_proposal,
    make_proposals,
    rank_patches,
    reproduce,
)

from conftest import FIXTURES

START = datetime(2026, 3, 2, 9, tzinfo=timezone.utc)
S = ProposalStatus


def drafted(tmp_path, fixture):
    d = tmp_path / fixture
    shutil.copytree(FIXTURES / fixture, d)
    clock = FakeClock(START)
    detected = clock.now()
    build = Build.load(d, detected)
    attempt = attempt_repair(build, reproduce(build, analyze_log(build.log)), RepairConfig(), clock, detected)
    return make_proposals(fixture, build.id, attempt.patches), clock


def toy(pid="b-nopol", build="b", rank=1):
    patch = Patch(Engine.NOPOL, (), "--- a\n+++ a\n@@ -1 +1 @@\n-x\n+y\n", {"a": "y\n"}, ["t::a"], "swap", Timeline())
    return Proposal(pid, "proj", build, Engine.NOPOL, patch.to_json(), "msg\n", Timeline(), rank=rank)


def test_transition_table():
    for src in S:
        for dst in S:
            p = toy()
            p.status = src
            if dst in TRANSITIONS[src]:
                p.transition(dst)
                assert p.status is dst
            else:
                with pytest.raises(IllegalTransition):
                    p.transition(dst)


def test_emit_writes_three_files(tmp_path):
    (proposal,), clock = drafted(tmp_path, "ditto-mini")
    queue = ReviewQueue(tmp_path / "state")
    queue.add(proposal)
    queue.approve(proposal.id, "looks right")
    dest = emit_proposal(proposal, tmp_path / "out", clock)
    assert dest == tmp_path / "out" / "ditto-mini" / proposal.id
    assert sorted(p.name for p in dest.iterdir()) == ["message.md", "metadata.json", "patch.diff"]
    assert (dest / "patch.diff").read_text() == proposal.diff
    message = (dest / "message.md").read_text()
    assert "Failing tests fixed (1):" in message
    assert "- `tests/test_mapping.mini::test_shutdown_without_processor`" in message
    meta = json.loads((dest / "metadata.json").read_text())
    assert meta["status"] == "Submitted" and meta["note"] == "looks right"
    tl = meta["timeline"]
    keys = ["build_created", "detected", "repair_started", "patch_found", "proposed"]
    stamps = [datetime.fromisoformat(tl[k]) for k in keys]
    assert stamps == sorted(stamps)
    assert proposal.status is S.SUBMITTED


def test_emit_requires_approval_and_fresh_destination(tmp_path):
    (proposal,), clock = drafted(tmp_path, "offby1-mini")
    with pytest.raises(IllegalTransition):
        emit_proposal(proposal, tmp_path / "out", clock)
    proposal.transition(S.APPROVED)
    (tmp_path / "out" / "offby1-mini" / proposal.id).mkdir(parents=True)
    with pytest.raises(ProposalExists):
        emit_proposal(proposal, tmp_path / "out", clock)
    assert proposal.status is S.APPROVED


def test_queue_persistence(tmp_path):
    q = ReviewQueue(tmp_path)
    q.add(toy("b2-nopol", "b2"))
    q.add(toy("b1-nopol", "b1"))
    q.add(toy("b1-genprog", "b1", rank=2))
    q.reject("b2-nopol", "wrong idea")
    q.save()
    back = ReviewQueue(tmp_path)
    assert [p.id for p in back.pending()] == ["b1-nopol", "b1-genprog"]
    assert back.get("b2-nopol").status is S.REJECTED and back.get("b2-nopol").note == "wrong idea"
    with pytest.raises(UnknownProposal):
        back.get("nope")
    with pytest.raises(ProposalExists):
        back.add(toy("b1-nopol"))


def test_rank_smallest_then_engine_order():
    def mk(engine, lines):
        diff = "--- a\n+++ a\n@@ -1 +1 @@\n" + "-x\n+y\n" * lines
        return Patch(engine, (), diff, {}, [], "", Timeline())

    ranked = rank_patches([mk(Engine.GENPROG, 1), mk(Engine.NPEFIX, 1), mk(Engine.NOPOL, 3)])
    assert [p.engine for p in ranked] == [Engine.NPEFIX, Engine.GENPROG, Engine.NOPOL]


class ReviewModel(RuleBasedStateMachine):
    """The queue against a dictionary model of legal transitions."""

    def __init__(self):
        super().__init__()
        import tempfile

        self.dir = tempfile.mkdtemp()
        self.queue = ReviewQueue(self.dir)
        self.model: dict[str, S] = {}
        self.clock = FakeClock(START)
        self.n = 0

    @rule()
    def add(self):
        self.n += 1
        pid = f"b{self.n}-nopol"
        self.queue.add(toy(pid, f"b{self.n}"))
        self.model[pid] = S.PENDING

    @precondition(lambda self: self.model)
    @rule(data=st.data(), action=st.sampled_from(["approve", "reject", "emit"]))
    def act(self, data, action):
        pid = data.draw(st.sampled_from(sorted(self.model)))
        current = self.model[pid]
        target = {"approve": S.APPROVED, "reject": S.REJECTED, "emit": S.SUBMITTED}[action]
        legal = target in TRANSITIONS[current]
        try:
            if action == "approve":
                self.queue.approve(pid)
            elif action == "reject":
                self.queue.reject(pid, "no")
            else:
                emit_proposal(self.queue.get(pid), f"{self.dir}/out", self.clock)
        except IllegalTransition:
            assert not legal
            return
        assert legal
        self.model[pid] = target

    @rule()
    def reload(self):
        self.queue.save()
        self.queue = ReviewQueue(self.dir)

    @invariant()
    def agrees(self):
        assert {p.id: p.status for p in self.queue} == self.model


TestReviewModel = ReviewModel.TestCase
TestReviewModel.settings = settings(max_examples=30, stateful_step_count=15, deadline=None)
