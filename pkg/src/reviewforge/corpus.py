"""Corpus ingestion and storage.

Normalizes submission threads (from a JSON HTTP API or a local dump
directory) into PaperRecord rows persisted as append-only JSONL with a
schema_version field on every line.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import httpx

from .errors import NetworkError, SchemaError
from .jsonl import SCHEMA_VERSION, Appender, dumps, read_lines

logger = logging.getLogger(__name__)

REBUTTAL_MARKER = "--- rebuttal message {k} ---"

# Section names recognized as boundaries inside a review body.
_WEAKNESS_HEADERS = {"weaknesses", "weaknesses & questions", "w"}
_QUESTION_HEADERS = {"questions", "q"}
_OTHER_HEADERS = {
    "summary",
    "strengths",
    "limitations",
    "soundness",
    "presentation",
    "contribution",
    "rating",
    "confidence",
    "ethics",
    "suggestions",
}
_ALL_HEADERS = _WEAKNESS_HEADERS | _QUESTION_HEADERS | _OTHER_HEADERS

_HEADER_RE = re.compile(r"^\s*#{0,6}\s*\**\s*([A-Za-z &]+?)\s*:?\s*\**\s*:?\s*$")


def _header_kind(line: str) -> str | None:
    m = _HEADER_RE.match(line)
    if not m:
        return None
    name = m.group(1).strip().lower()
    if name in _WEAKNESS_HEADERS:
        return "weaknesses"
    if name in _QUESTION_HEADERS:
        return "questions"
    if name in _ALL_HEADERS:
        return "other"
    return None


def extract_sections(full_text: str) -> tuple[str, str]:
    """Pull (weaknesses_text, questions_text) out of a review body.

    Headers are matched case-insensitively; when no weakness-like header
    exists the whole review becomes weaknesses_text so the structural
    filter downstream decides, maximizing recall here.
    """
    weak: list[str] = []
    ques: list[str] = []
    current: list[str] | None = None
    found_any = False
    for line in full_text.split("\n"):
        kind = _header_kind(line)
        if kind == "weaknesses":
            current = weak
            found_any = True
            continue
        if kind == "questions":
            current = ques
            found_any = True
            continue
        if kind == "other":
            current = None
            continue
        if current is not None:
            current.append(line)
    if not found_any:
        return full_text.strip(), ""
    return "\n".join(weak).strip(), "\n".join(ques).strip()


@dataclass
class ReviewDoc:
    reviewer_id: str
    full_text: str
    weaknesses_text: str = ""
    questions_text: str = ""
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            "reviewer_id": self.reviewer_id,
            "full_text": self.full_text,
            "weaknesses_text": self.weaknesses_text,
            "questions_text": self.questions_text,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewDoc":
        return cls(
            reviewer_id=d["reviewer_id"],
            full_text=d["full_text"],
            weaknesses_text=d.get("weaknesses_text", ""),
            questions_text=d.get("questions_text", ""),
            created_at=d.get("created_at", ""),
        )


def concatenate_messages(messages: list[dict]) -> str:
    """Join rebuttal messages chronologically with marker separators.

    Ties on timestamp break by message id, so the result is independent
    of input order.
    """
    ordered = sorted(messages, key=lambda m: (str(m.get("timestamp", "")), str(m.get("msg_id", ""))))
    parts = [
        REBUTTAL_MARKER.format(k=k) + "\n" + m.get("text", "")
        for k, m in enumerate(ordered, start=1)
    ]
    return "\n\n".join(parts)


@dataclass
class RebuttalDoc:
    messages: list[dict] = field(default_factory=list)
    concatenated: str = ""

    def __post_init__(self):
        if self.messages and not self.concatenated:
            self.concatenated = concatenate_messages(self.messages)

    @property
    def empty(self) -> bool:
        return not self.messages

    def to_dict(self) -> dict:
        return {"messages": self.messages, "concatenated": self.concatenated}

    @classmethod
    def from_dict(cls, d: dict) -> "RebuttalDoc":
        return cls(messages=d.get("messages", []), concatenated=d.get("concatenated", ""))


@dataclass
class PaperRecord:
    paper_id: str
    title: str
    manuscript: str
    reviews: list[ReviewDoc]
    rebuttal: RebuttalDoc
    rating: float | None = None

    @property
    def alignment_eligible(self) -> bool:
        return bool(self.reviews) and not self.rebuttal.empty and bool(self.manuscript)

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "paper_id": self.paper_id,
            "title": self.title,
            "manuscript": self.manuscript,
            "reviews": [r.to_dict() for r in self.reviews],
            "rebuttal": self.rebuttal.to_dict(),
        }
        if self.rating is not None:
            d["rating"] = self.rating
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PaperRecord":
        return cls(
            paper_id=d["paper_id"],
            title=d.get("title", ""),
            manuscript=d.get("manuscript", ""),
            reviews=[ReviewDoc.from_dict(r) for r in d.get("reviews", [])],
            rebuttal=RebuttalDoc.from_dict(d.get("rebuttal", {})),
            rating=d.get("rating"),
        )


def normalize_submission(raw: dict) -> PaperRecord:
    """Build a PaperRecord from one raw submission blob.

    Multi-part reviews posted as separate comments are merged by
    reviewer_id in posting order.
    """
    if "paper_id" not in raw:
        raise SchemaError("missing paper_id")
    if not raw.get("manuscript"):
        raise SchemaError(f"{raw['paper_id']}: missing manuscript")
    by_reviewer: dict[str, ReviewDoc] = {}
    for rv in raw.get("reviews", []):
        rid = rv.get("reviewer_id")
        text = rv.get("full_text", rv.get("text", ""))
        if not rid or not text:
            raise SchemaError(f"{raw['paper_id']}: review missing reviewer_id or text")
        if rid in by_reviewer:
            merged = by_reviewer[rid]
            merged.full_text = merged.full_text + "\n\n" + text
        else:
            by_reviewer[rid] = ReviewDoc(
                reviewer_id=rid, full_text=text, created_at=str(rv.get("created_at", ""))
            )
    reviews = []
    for rv in by_reviewer.values():
        rv.weaknesses_text, rv.questions_text = extract_sections(rv.full_text)
        reviews.append(rv)
    rebuttal = RebuttalDoc(messages=list(raw.get("rebuttal", {}).get("messages", [])))
    return PaperRecord(
        paper_id=raw["paper_id"],
        title=raw.get("title", ""),
        manuscript=raw["manuscript"],
        reviews=reviews,
        rebuttal=rebuttal,
        rating=raw.get("rating"),
    )


def ingest_submission(
    api_endpoint: str,
    paper_id: str,
    token: str | None = None,
    max_retries: int = 3,
    client: httpx.Client | None = None,
) -> PaperRecord:
    """Fetch one submission from ``{endpoint}/submissions/{paper_id}``."""
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    own = client is None
    client = client or httpx.Client()
    try:
        url = api_endpoint.rstrip("/") + f"/submissions/{paper_id}"
        last: Exception | None = None
        for attempt in range(max_retries):
            try:
                resp = client.get(url, headers=headers, timeout=30.0)
                if resp.status_code in (429, 500, 502, 503):
                    last = NetworkError(f"HTTP {resp.status_code}")
                    time.sleep(min(2**attempt * 0.1, 2.0))
                    continue
                resp.raise_for_status()
                return normalize_submission(resp.json())
            except httpx.TransportError as exc:
                last = NetworkError(str(exc))
                time.sleep(min(2**attempt * 0.1, 2.0))
        raise last if last else NetworkError("unreachable")
    finally:
        if own:
            client.close()


def iter_dump(source_dir: str | Path) -> Iterator[dict]:
    import json

    if not Path(source_dir).is_dir():
        raise FileNotFoundError(f"dump directory {source_dir} does not exist")
    for path in sorted(Path(source_dir).glob("*.json")):
        yield json.loads(path.read_text(encoding="utf-8"))


def ingest_to_file(
    source: str,
    out_path: str | Path,
    token: str | None = None,
    strict: bool = False,
) -> tuple[int, int]:
    """Ingest every submission from a dump dir or API into corpus JSONL.

    Returns (written, skipped).  Schema violations skip the record and
    log unless strict.
    """
    appender = Appender(out_path)
    written = skipped = 0
    if source.startswith("http://") or source.startswith("https://"):
        with httpx.Client() as client:
            url = source.rstrip("/") + "/submissions"
            resp = client.get(url, timeout=30.0)
            resp.raise_for_status()
            ids = resp.json()
            for pid in ids:
                try:
                    rec = ingest_submission(source, pid, token=token, client=client)
                except SchemaError as exc:
                    if strict:
                        raise
                    logger.warning("skipping %s: %s", pid, exc)
                    skipped += 1
                    continue
                appender.append(rec.to_dict())
                written += 1
    else:
        for raw in iter_dump(source):
            try:
                rec = normalize_submission(raw)
            except SchemaError as exc:
                if strict:
                    raise
                logger.warning("skipping record: %s", exc)
                skipped += 1
                continue
            appender.append(rec.to_dict())
            written += 1
    return written, skipped


def load_corpus(path: str | Path, strict: bool = False):
    """Yield PaperRecord rows in file order; malformed lines are collected.

    Returns (iterator, errors list).  The errors list fills as the
    iterator advances.
    """
    lines, errors = read_lines(path, strict=strict)

    def gen():
        for _, rec in lines:
            yield PaperRecord.from_dict(rec)

    return gen(), errors


def reserialize(record: PaperRecord) -> str:
    return dumps(record.to_dict())
