"""Two-stage review-to-rebuttal alignment with greedy one-to-one assignment.

Stage one links explicit anchors (label tokens, long verbatim quotes) at
confidence 1.0.  Stage two asks the LLM matcher for span-level links with
calibrated confidences.  Candidates are then resolved to a one-to-one map
per paper by greedy descending-confidence assignment with tie discarding.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .corpus import RebuttalDoc
from .errors import MatcherParseError
from .gateway import Gateway, render_template
from .jsonl import SCHEMA_VERSION
from .segmenter import ReviewSegment

DEFAULT_TAU = 0.7
QUOTE_MIN_WORDS = 6


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _span_hash(text: str) -> str:
    return hashlib.sha256(normalize_ws(text).lower().encode("utf-8")).hexdigest()[:16]


@dataclass
class RebuttalSpan:
    span_id: str
    paper_id: str
    index_t: int
    text: str
    char_range: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "span_id": self.span_id,
            "paper_id": self.paper_id,
            "index_t": self.index_t,
            "text": self.text,
            "char_range": list(self.char_range) if self.char_range else None,
        }


@dataclass(frozen=True)
class CandidateMatch:
    segment_id: str
    span_id: str
    confidence: float
    stage: str  # anchor | semantic


@dataclass
class MappedPair:
    paper_id: str
    segment_id: str
    span_id: str
    confidence: float
    span_text: str = ""
    segment_text: str = ""
    perspective: str | None = None
    impact: str | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "paper_id": self.paper_id,
            "segment_id": self.segment_id,
            "span_id": self.span_id,
            "confidence": self.confidence,
            "span_text": self.span_text,
            "segment_text": self.segment_text,
            "perspective": self.perspective,
            "impact": self.impact,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MappedPair":
        return cls(
            paper_id=d["paper_id"],
            segment_id=d["segment_id"],
            span_id=d["span_id"],
            confidence=d["confidence"],
            span_text=d.get("span_text", ""),
            segment_text=d.get("segment_text", ""),
            perspective=d.get("perspective"),
            impact=d.get("impact"),
        )


class SpanRegistry:
    """Deduplicates rebuttal spans by normalized-text hash per paper."""

    def __init__(self, paper_id: str):
        self.paper_id = paper_id
        self._by_hash: dict[str, RebuttalSpan] = {}
        self.spans: list[RebuttalSpan] = []

    def intern(self, text: str, char_range: tuple[int, int] | None = None) -> RebuttalSpan:
        h = _span_hash(text)
        if h in self._by_hash:
            return self._by_hash[h]
        span = RebuttalSpan(
            span_id=f"{self.paper_id}/r{len(self.spans) + 1}",
            paper_id=self.paper_id,
            index_t=len(self.spans) + 1,
            text=text.strip(),
            char_range=char_range,
        )
        self._by_hash[h] = span
        self.spans.append(span)
        return span


def _paragraphs(concatenated: str) -> list[tuple[int, int, str]]:
    out = []
    pos = 0
    for block in concatenated.split("\n\n"):
        start = concatenated.index(block, pos)
        pos = start + len(block)
        # the message marker shares a block with the first paragraph
        first, nl, rest = block.partition("\n")
        if first.strip().startswith("--- rebuttal message"):
            start += len(first) + len(nl)
            block = rest
        stripped = block.strip()
        if stripped:
            out.append((start, start + len(block), stripped))
    return out


def _locate(concatenated: str, text: str) -> tuple[int, int] | None:
    """Whitespace-insensitive substring search; None when not locatable."""
    idx = concatenated.find(text)
    if idx >= 0:
        return (idx, idx + len(text))
    pattern = re.escape(normalize_ws(text)).replace(r"\ ", r"\s+")
    m = re.search(pattern, concatenated)
    return (m.start(), m.end()) if m else None


def anchor_match(
    segments: list[ReviewSegment],
    rebuttal: RebuttalDoc,
    registry: SpanRegistry,
) -> list[CandidateMatch]:
    """Explicit-anchor pass: label tokens or verbatim quotes >= 6 words.

    The matched span is the rebuttal paragraph containing the anchor;
    all anchor matches carry confidence 1.0.  Label tokens like "W3" do
    not say whose review they refer to, so they only count as anchors
    when exactly one segment in the paper carries that index.
    """
    paras = _paragraphs(rebuttal.concatenated)
    if not paras:
        return []
    lower_paras = [(s, e, t, t.lower()) for s, e, t in paras]
    index_counts: dict[int, int] = {}
    for seg in segments:
        index_counts[seg.index_k] = index_counts.get(seg.index_k, 0) + 1
    out: list[CandidateMatch] = []
    for seg in segments:
        hit: tuple[int, int, str] | None = None
        label_res = [
            re.compile(rf"\b[wq]\s?{seg.index_k}\b"),
            re.compile(rf"\bpoint\s+{seg.index_k}\b"),
        ]
        if index_counts[seg.index_k] == 1:
            for s, e, t, tl in lower_paras:
                if any(r.search(tl) for r in label_res):
                    hit = (s, e, t)
                    break
        if hit is None:
            words = normalize_ws(seg.text).lower().split()
            quotes = {
                " ".join(words[i : i + QUOTE_MIN_WORDS])
                for i in range(len(words) - QUOTE_MIN_WORDS + 1)
            }
            for s, e, t, tl in lower_paras:
                tl_norm = normalize_ws(tl)
                if any(q in tl_norm for q in quotes):
                    hit = (s, e, t)
                    break
        if hit is not None:
            span = registry.intern(hit[2], char_range=(hit[0], hit[1]))
            out.append(
                CandidateMatch(
                    segment_id=seg.segment_id, span_id=span.span_id, confidence=1.0, stage="anchor"
                )
            )
    return out


_MAP_LINE = re.compile(
    r"^W(?P<idx>\d+)\s*->\s*(?:"
    r"No Response\s*\(Confidence:\s*(?P<noconf>[0-9.]+)\)"
    r"|R\d+\s*:\s*(?P<body>.*?)\s*\(Confidence:\s*(?P<conf>[0-9.]+)\)"
    r")\s*$",
    re.S,
)


def parse_mapping_reply(reply: str, expected: int) -> dict[int, tuple[str, float] | None]:
    """Parse matcher output into {w_index: (span_text, confidence) | None}.

    Every index 1..expected must be present exactly once; None encodes a
    "No Response" line.
    """
    # split on W-line starts so multi-line span bodies stay attached
    chunks = re.split(r"\n(?=W\d+\s*->)", reply.strip())
    found: dict[int, tuple[str, float] | None] = {}
    for chunk in chunks:
        m = _MAP_LINE.match(chunk.strip())
        if not m:
            raise MatcherParseError(f"malformed mapping line: {chunk[:80]!r}")
        idx = int(m.group("idx"))
        if idx in found:
            raise MatcherParseError(f"duplicate mapping line for W{idx}")
        if m.group("body") is not None:
            conf = float(m.group("conf"))
            if not 0.0 <= conf <= 1.0:
                raise MatcherParseError(f"confidence out of range on W{idx}: {conf}")
            found[idx] = (m.group("body").strip(), conf)
        else:
            found[idx] = None
    missing = set(range(1, expected + 1)) - set(found)
    if missing:
        raise MatcherParseError(f"missing mapping lines for W indices {sorted(missing)}")
    return found


def semantic_match(
    unmatched: list[ReviewSegment],
    rebuttal: RebuttalDoc,
    gateway: Gateway,
    registry: SpanRegistry,
) -> list[CandidateMatch]:
    """LLM matcher pass over the segments the anchor pass left unmatched."""
    if not unmatched:
        return []
    listing = "\n".join(f"W{i}: {seg.text}" for i, seg in enumerate(unmatched, start=1))
    req = render_template(
        "map", {"weaknesses_list": listing, "rebuttal_text": rebuttal.concatenated}
    )
    reply = gateway.complete(req).text
    parsed = parse_mapping_reply(reply, expected=len(unmatched))
    out: list[CandidateMatch] = []
    for i, seg in enumerate(unmatched, start=1):
        entry = parsed[i]
        if entry is None:
            continue
        text, conf = entry
        span = registry.intern(text, char_range=_locate(rebuttal.concatenated, text))
        out.append(
            CandidateMatch(
                segment_id=seg.segment_id, span_id=span.span_id, confidence=conf, stage="semantic"
            )
        )
    return out


def greedy_assign(
    cands: list[CandidateMatch], tau: float = DEFAULT_TAU
) -> list[tuple[str, str, float]]:
    """Greedy one-to-one assignment in descending confidence.

    Candidates below tau are dropped first.  Processing order is total
    (confidence desc, then segment_id, then span_id) so permuting the
    input cannot change the result.  When the current best candidate ties
    (confidence equal after rounding to 2 decimals) with another still
    eligible candidate on the same segment or span, the whole tie group
    is discarded.
    """
    live = [
        (round(c.confidence, 2), c.segment_id, c.span_id)
        for c in cands
        if c.confidence >= tau
    ]
    live.sort(key=lambda x: (-x[0], x[1], x[2]))
    used_seg: set[str] = set()
    used_span: set[str] = set()
    accepted: list[tuple[str, str, float]] = []
    i = 0
    while i < len(live):
        conf, seg, span = live[i]
        if seg in used_seg or span in used_span:
            i += 1
            continue
        contenders = []
        j = i + 1
        while j < len(live) and live[j][0] == conf:
            c2, s2, p2 = live[j]
            if (s2 == seg or p2 == span) and s2 not in used_seg and p2 not in used_span:
                contenders.append(j)
            j += 1
        if contenders:
            dead = {i, *contenders}
            live = [x for k, x in enumerate(live) if k not in dead]
            continue
        used_seg.add(seg)
        used_span.add(span)
        accepted.append((seg, span, conf))
        i += 1
    return accepted


def align_paper(
    paper_id: str,
    segments: list[ReviewSegment],
    rebuttal: RebuttalDoc,
    gateway: Gateway,
    tau: float = DEFAULT_TAU,
) -> tuple[list[MappedPair], SpanRegistry]:
    """Full per-paper alignment: anchors, semantic matcher, greedy map."""
    registry = SpanRegistry(paper_id)
    anchors = anchor_match(segments, rebuttal, registry)
    anchored_ids = {c.segment_id for c in anchors}
    rest = [s for s in segments if s.segment_id not in anchored_ids]
    semantic = semantic_match(rest, rebuttal, gateway, registry) if rest else []
    assigned = greedy_assign(anchors + semantic, tau=tau)
    span_by_id = {s.span_id: s for s in registry.spans}
    seg_by_id = {s.segment_id: s for s in segments}
    pairs = [
        MappedPair(
            paper_id=paper_id,
            segment_id=seg_id,
            span_id=span_id,
            confidence=conf,
            span_text=span_by_id[span_id].text,
            segment_text=seg_by_id[seg_id].text,
        )
        for seg_id, span_id, conf in assigned
    ]
    pairs.sort(key=lambda p: p.segment_id)
    return pairs, registry
