"""Split review Weaknesses & Questions text into atomic critique units.

An itemization heuristic runs first; reviews without at least two
enumerated items fall back to the LLM segmentation prompt, whose
"Point N:" output is parsed strictly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import ReviewDoc
from .errors import EmptyBody, NonContiguousIndices, SegmentationParseError
from .gateway import Gateway, render_template
from .jsonl import SCHEMA_VERSION

MIN_SEGMENT_CHARS = 15

# Enumeration markers, each anchored at a line start or after sentence end.
_ITEM_MARKER = re.compile(
    r"(?:(?<=^)|(?<=\n)|(?<=[.!?])\s)\s*(?:"
    r"(?P<num>\d{1,2})[.)]\s+"
    r"|(?P<wq>[WQ]\d{1,2})[:.)\s]\s*"
    r"|(?P<bullet>[-*+])\s+"
    r")"
)


@dataclass
class ReviewSegment:
    segment_id: str
    paper_id: str
    reviewer_id: str
    index_k: int
    text: str
    source: str  # heuristic | llm
    perspective: str | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "segment_id": self.segment_id,
            "paper_id": self.paper_id,
            "reviewer_id": self.reviewer_id,
            "index_k": self.index_k,
            "text": self.text,
            "source": self.source,
            "perspective": self.perspective,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewSegment":
        return cls(
            segment_id=d["segment_id"],
            paper_id=d["paper_id"],
            reviewer_id=d["reviewer_id"],
            index_k=d["index_k"],
            text=d["text"],
            source=d.get("source", "heuristic"),
            perspective=d.get("perspective"),
        )


def detect_itemization(text: str) -> list[str] | None:
    """Return item texts when an enumeration pattern covers >= 2 items.

    Items shorter than MIN_SEGMENT_CHARS merge into the following item.
    Mixed W/Q prefixes count as one enumeration sequence; nothing is
    returned for unstructured prose.
    """
    if not text.strip():
        return None
    markers = list(_ITEM_MARKER.finditer(text))
    if len(markers) < 2:
        return None
    spans: list[str] = []
    for m, nxt in zip(markers, markers[1:] + [None]):
        end = nxt.start() if nxt is not None else len(text)
        body = text[m.end() : end].strip()
        if body:
            spans.append(body)
    if len(spans) < 2:
        return None
    merged: list[str] = []
    pending = ""
    for body in spans:
        if pending:
            body = pending + " " + body
            pending = ""
        if len(body) < MIN_SEGMENT_CHARS:
            pending = body
            continue
        merged.append(body)
    if pending:
        if merged:
            merged[-1] = merged[-1] + " " + pending
        else:
            merged.append(pending)
    return merged if len(merged) >= 2 else None


_POINT_RE = re.compile(r"^Point\s+(\d+)\s*:\s*", re.M)


def parse_point_list(text: str) -> list[tuple[int, str]]:
    """Parse ``Point N: body`` lines with multi-line bodies.

    Indices must run 1..K contiguously; empty bodies are rejected.
    """
    matches = list(_POINT_RE.finditer(text))
    if not matches:
        raise SegmentationParseError("no 'Point N:' lines found")
    out: list[tuple[int, str]] = []
    for m, nxt in zip(matches, matches[1:] + [None]):
        idx = int(m.group(1))
        end = nxt.start() if nxt is not None else len(text)
        body = text[m.end() : end].strip()
        if not body:
            raise EmptyBody(f"Point {idx} has no content")
        out.append((idx, body))
    indices = [i for i, _ in out]
    if indices != list(range(1, len(indices) + 1)):
        raise NonContiguousIndices(f"indices {indices} are not 1..{len(indices)}")
    return out


def segment_review(
    paper_id: str, review: ReviewDoc, gateway: Gateway | None = None
) -> list[ReviewSegment]:
    """Produce ordered segments for one review.

    Raises SegmentationParseError when the LLM fallback output violates
    the Point format; callers flag such reviews for the structural
    filter.
    """
    section = "\n\n".join(t for t in (review.weaknesses_text, review.questions_text) if t)
    if not section.strip():
        return []
    items = detect_itemization(section)
    source = "heuristic"
    if items is None:
        if gateway is None:
            raise SegmentationParseError("no itemization and no gateway for LLM fallback")
        req = render_template(
            "segment", {"weaknesses_and_questions_text": section}
        )
        reply = gateway.complete(req).text
        items = [body for _, body in parse_point_list(reply)]
        source = "llm"
    return [
        ReviewSegment(
            segment_id=f"{paper_id}/{review.reviewer_id}/{k}",
            paper_id=paper_id,
            reviewer_id=review.reviewer_id,
            index_k=k,
            text=body,
            source=source,
        )
        for k, body in enumerate(items, start=1)
    ]
