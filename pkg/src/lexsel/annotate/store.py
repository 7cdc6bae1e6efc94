"""Judgment persistence.

Append-only journal: every submission is retained, and the working view
materializes the latest entry per (task, annotator). Keeping superseded
entries makes human-data revisions auditable after the fact.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Judgment:
    task_id: str
    annotator_id: str
    value: str
    timestamp: float


class JudgmentStore:
    """Thread-safe journal of judgments, optionally file-backed (JSONL).

    Writes to a single task are serialized by the store lock; last write
    wins in the materialized view while the journal keeps every entry.
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._journal: list[Judgment] = []
        self._latest: dict[tuple[str, str], Judgment] = {}
        if self._path is not None and self._path.exists():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                self._append(
                    Judgment(
                        task_id=obj["task_id"],
                        annotator_id=obj["annotator_id"],
                        value=obj["value"],
                        timestamp=obj["timestamp"],
                    ),
                    persist=False,
                )

    def _append(self, judgment: Judgment, persist: bool) -> None:
        self._journal.append(judgment)
        self._latest[(judgment.task_id, judgment.annotator_id)] = judgment
        if persist and self._path is not None:
            line = json.dumps(
                {
                    "task_id": judgment.task_id,
                    "annotator_id": judgment.annotator_id,
                    "value": judgment.value,
                    "timestamp": judgment.timestamp,
                },
                ensure_ascii=False,
            )
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def record(
        self, task_id: str, annotator_id: str, value: str, timestamp: float | None = None
    ) -> Judgment:
        judgment = Judgment(
            task_id=task_id,
            annotator_id=annotator_id,
            value=value,
            timestamp=time.time() if timestamp is None else timestamp,
        )
        with self._lock:
            self._append(judgment, persist=True)
        return judgment

    def journal(self) -> tuple[Judgment, ...]:
        with self._lock:
            return tuple(self._journal)

    def latest(self) -> dict[tuple[str, str], Judgment]:
        """Snapshot of the latest judgment per (task, annotator)."""
        with self._lock:
            return dict(self._latest)

    def __len__(self) -> int:
        with self._lock:
            return len(self._latest)


def load_judgments(path: str | Path) -> list[Judgment]:
    """Read a journal file into latest-wins order-preserving entries
    (the full journal; callers wanting the view should use JudgmentStore)."""
    store = JudgmentStore(path)
    return list(store.journal())
