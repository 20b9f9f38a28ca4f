"""Append-only event ledger (``ledger.jsonl``) used for dedup and statistics."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Iterable, Union

from .storage import atomic_write_text

LEDGER_FILE = "ledger.jsonl"


def encode(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


class Ledger:
    """Events in commit order. Every commit rewrites the file atomically."""

    def __init__(self, state_dir: Union[str, Path]):
        self.path = Path(state_dir) / LEDGER_FILE
        self._lock = threading.Lock()
        self.events: list[dict] = []
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self.events.append(json.loads(line))

    def commit(self, events: Iterable[dict]) -> None:
        events = list(events)
        if not events:
            return
        with self._lock:
            self.events.extend(events)
            atomic_write_text(self.path, "".join(encode(e) + "\n" for e in self.events))

    def processed(self) -> set[str]:
        return {e["build"] for e in self.events if e["event"] == "processed"}

    def of_kind(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["event"] == kind]
