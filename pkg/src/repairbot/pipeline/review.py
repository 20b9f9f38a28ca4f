"""The human review queue and pull-request-style proposal emission."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from ..patch import ENGINE_ORDER, Engine, Patch, Timeline, changed_lines
from .clock import Clock
from .storage import atomic_write_json, atomic_write_text, dump_json, read_json

QUEUE_FILE = "review.json"


class ProposalStatus(str, enum.Enum):
    PENDING = "Pending"
    APPROVED = "Approved"
    REJECTED = "Rejected"
    SUBMITTED = "Submitted"


TRANSITIONS = {
    ProposalStatus.PENDING: {ProposalStatus.APPROVED, ProposalStatus.REJECTED},
    ProposalStatus.APPROVED: {ProposalStatus.SUBMITTED},
    ProposalStatus.REJECTED: set(),
    ProposalStatus.SUBMITTED: set(),
}


class ReviewError(Exception):
    pass


class UnknownProposal(ReviewError):
    pass


class IllegalTransition(ReviewError):
    pass


class ProposalExists(ReviewError):
    pass


@dataclass
class Proposal:
    """A sanity-checked patch waiting for, or past, human review.

    The patch is kept in its serialized form so the queue can be reloaded
    without the snapshot it came from.
    """

    id: str
    project: str
    build: str
    engine: Engine
    patch: dict
    message: str
    timeline: Timeline
    status: ProposalStatus = ProposalStatus.PENDING
    note: str = ""
    rank: int = 1
    of: int = 1

    @property
    def diff(self) -> str:
        return self.patch["diff"]

    @property
    def size(self) -> int:
        return changed_lines(self.diff)

    def transition(self, status: ProposalStatus) -> None:
        if status not in TRANSITIONS[self.status]:
            raise IllegalTransition(f"{self.id}: {self.status.value} -> {status.value} is not allowed")
        self.status = status

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "project": self.project,
            "build": self.build,
            "engine": self.engine.value,
            "patch": self.patch,
            "message": self.message,
            "timeline": self.timeline.to_json(),
            "status": self.status.value,
            "note": self.note,
            "rank": self.rank,
            "of": self.of,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Proposal":
        return cls(
            id=data["id"],
            project=data["project"],
            build=data["build"],
            engine=Engine(data["engine"]),
            patch=data["patch"],
            message=data["message"],
            timeline=Timeline.from_json(data["timeline"]),
            status=ProposalStatus(data["status"]),
            note=data.get("note", ""),
            rank=data.get("rank", 1),
            of=data.get("of", 1),
        )


def proposal_id(build: str, engine: Engine) -> str:
    return f"{build}-{engine.value.lower()}"


def render_message(project: str, build: str, patch: Patch) -> str:
    lines = [
        f"# Repair proposal for {project}",
        "",
        f"Build `{build}` failed; this patch makes the full test suite pass again.",
        "",
        f"Engine: {patch.engine.value}",
        f"Change: {patch.summary}",
        "",
        f"Failing tests fixed ({len(patch.fixed_tests)}):",
    ]
    lines += [f"- `{t}`" for t in patch.fixed_tests]
    return "\n".join(lines) + "\n"


def rank_patches(patches: Iterable[Patch]) -> list[Patch]:
    """Smallest diff first, ties broken by engine order."""
    return sorted(patches, key=lambda p: (p.size, ENGINE_ORDER.index(p.engine)))


def make_proposals(project: str, build: str, patches: Iterable[Patch]) -> list[Proposal]:
    ranked = rank_patches(patches)
    return [
        Proposal(
            id=proposal_id(build, p.engine),
            project=project,
            build=build,
            engine=p.engine,
            patch=p.to_json(),
            message=render_message(project, build, p),
            timeline=p.timeline,
            rank=i,
            of=len(ranked),
        )
        for i, p in enumerate(ranked, 1)
    ]


class ReviewQueue:
    """All proposals, persisted as one JSON document in the state directory."""

    def __init__(self, state_dir: Union[str, Path]):
        self.path = Path(state_dir) / QUEUE_FILE
        raw = read_json(self.path, {"proposals": []})
        self._items: dict[str, Proposal] = {}
        for data in raw["proposals"]:
            p = Proposal.from_json(data)
            self._items[p.id] = p

    def save(self) -> None:
        atomic_write_json(self.path, {"proposals": [p.to_json() for p in self._items.values()]})

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items.values())

    def add(self, proposal: Proposal) -> None:
        if proposal.id in self._items:
            raise ProposalExists(proposal.id)
        self._items[proposal.id] = proposal

    def get(self, pid: str) -> Proposal:
        try:
            return self._items[pid]
        except KeyError:
            raise UnknownProposal(pid) from None

    def pending(self) -> list[Proposal]:
        items = [p for p in self._items.values() if p.status is ProposalStatus.PENDING]
        return sorted(items, key=lambda p: (p.build, p.rank))

    def approve(self, pid: str, note: str = "") -> Proposal:
        p = self.get(pid)
        p.transition(ProposalStatus.APPROVED)
        if note:
            p.note = note
        return p

    def reject(self, pid: str, note: str) -> Proposal:
        p = self.get(pid)
        p.transition(ProposalStatus.REJECTED)
        p.note = note
        return p


def emit_proposal(proposal: Proposal, proposals_dir: Union[str, Path], clock: Clock) -> Path:
    """Write ``<dir>/<project>/<id>/`` and mark the proposal Submitted."""
    if proposal.status is not ProposalStatus.APPROVED:
        raise IllegalTransition(f"{proposal.id} must be Approved before emission, is {proposal.status.value}")
    dest = Path(proposals_dir) / proposal.project / proposal.id
    if dest.exists():
        raise ProposalExists(str(dest))
    proposal.timeline.proposed = clock.now()
    proposal.transition(ProposalStatus.SUBMITTED)
    metadata = {
        "id": proposal.id,
        "project": proposal.project,
        "build": proposal.build,
        "engine": proposal.engine.value,
        "status": proposal.status.value,
        "note": proposal.note,
        "fixed_tests": proposal.patch["fixed_tests"],
        "timeline": proposal.timeline.to_json(),
    }
    # write into a sibling temp dir, then rename the whole directory
    tmp = dest.with_name(f".{dest.name}.tmp")
    tmp.mkdir(parents=True, exist_ok=True)
    atomic_write_text(tmp / "patch.diff", proposal.diff)
    atomic_write_text(tmp / "message.md", proposal.message)
    atomic_write_text(tmp / "metadata.json", dump_json(metadata, sort_keys=False))
    tmp.rename(dest)
    return dest
