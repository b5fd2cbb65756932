"""Append-only line-delimited record store.

Every record is one JSON document per line with sorted keys, carrying a
strictly increasing sequence number. Records are never mutated; later
records reference earlier ones (e.g. an arbitration decision points at
the evaluation it resolves). Appends go through a single lock so
concurrent writers serialize.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Iterable

__all__ = ["Ledger"]


def _encode(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class Ledger:
    def __init__(self, path: Path | str | None = None):
        self.path = Path(path) if path is not None else None
        self._records: list[dict] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._records = [
                json.loads(line)
                for line in self.path.read_text().splitlines()
                if line.strip()
            ]

    @property
    def records(self) -> tuple[dict, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def append(self, kind: str, payload: dict) -> dict:
        """Append one record, assigning the next sequence number."""
        with self._lock:
            record = {"seq": len(self._records) + 1, "kind": kind, **payload}
            self._records.append(record)
            if self.path is not None:
                with self.path.open("a") as fh:
                    fh.write(_encode(record) + "\n")
                    fh.flush()
        return record

    def of_kind(self, kind: str) -> Iterable[dict]:
        return (r for r in self._records if r["kind"] == kind)

    def to_bytes(self) -> bytes:
        return ("".join(_encode(r) + "\n" for r in self._records)).encode()
