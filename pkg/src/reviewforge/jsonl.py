"""JSONL persistence helpers: canonical serialization, append-only writes."""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Any, Iterator

from .errors import ParseError

SCHEMA_VERSION = 1


def dumps(obj: Any) -> str:
    """Canonical one-line encoding: insertion order kept, no float reformat."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def read_lines(path: str | Path, strict: bool = False):
    """Yield (line_no, record) per valid line; collect ParseError otherwise.

    Returns an iterator; malformed lines raise immediately under strict,
    otherwise they are reported through the returned ``errors`` list.
    """
    errors: list[ParseError] = []

    def gen() -> Iterator[tuple[int, dict]]:
        with open(path, encoding="utf-8") as fh:
            for no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    yield no, json.loads(line)
                except json.JSONDecodeError as exc:
                    err = ParseError(no, str(exc))
                    if strict:
                        raise err from exc
                    errors.append(err)

    return gen(), errors


class Appender:
    """Serialized append-only JSONL writer shared across threads."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict) -> None:
        line = dumps(record) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())


def write_all(path: str | Path, records) -> int:
    """Write records to a fresh file; returns the count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")
            n += 1
    return n
