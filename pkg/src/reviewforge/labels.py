"""Perspective and impact taxonomies plus the LLM labeling calls."""

from __future__ import annotations

import json
import re
import string
from collections import Counter
from enum import Enum

from .aligner import MappedPair
from .errors import JsonShapeError, UnknownCategory, UnknownImpact
from .gateway import Gateway, render_template


class PerspectiveLabel(str, Enum):
    EXPERIMENTS = "Experiments"
    WRITING = "Writing"
    PRESENTATION = "Presentation"
    THEORY = "Theory"
    NOVELTY = "Novelty"
    REPRODUCIBILITY = "Reproducibility"
    EVALUATION = "Evaluation"
    MISCELLANEOUS = "Miscellaneous"

    @classmethod
    def parse(cls, raw: str) -> "PerspectiveLabel":
        name = raw.strip().strip(string.punctuation + string.whitespace).lower()
        for member in cls:
            if member.value.lower() == name:
                return member
        raise UnknownCategory(raw.strip()[:60])


TRAINING_PERSPECTIVES = tuple(
    p for p in PerspectiveLabel if p is not PerspectiveLabel.MISCELLANEOUS
)

MAJOR_PERSPECTIVES = frozenset(
    {
        PerspectiveLabel.EXPERIMENTS,
        PerspectiveLabel.EVALUATION,
        PerspectiveLabel.THEORY,
        PerspectiveLabel.NOVELTY,
        PerspectiveLabel.REPRODUCIBILITY,
    }
)


class ImpactLabel(str, Enum):
    CRP = "CRP"  # concrete revision performed
    SRP = "SRP"  # specific revision plan
    VCR = "VCR"  # vague commitment to revise
    DWC = "DWC"  # defend without change
    DRF = "DRF"  # deflect / reframe

    @property
    def rank(self) -> int:
        return _IMPACT_RANK[self]

    @classmethod
    def parse(cls, raw: str) -> "ImpactLabel":
        name = raw.strip().upper()
        try:
            return cls[name]
        except KeyError:
            raise UnknownImpact(raw.strip()[:60]) from None


_IMPACT_RANK = {
    ImpactLabel.CRP: 5,
    ImpactLabel.SRP: 4,
    ImpactLabel.VCR: 3,
    ImpactLabel.DWC: 2,
    ImpactLabel.DRF: 1,
}


def label_perspective(segment_text: str, gateway: Gateway) -> PerspectiveLabel:
    """Classify one review segment; retries once on an unparseable reply."""
    req = render_template("perspective", {"weakness_content": segment_text})
    reply = gateway.complete(req).text
    try:
        return PerspectiveLabel.parse(reply)
    except UnknownCategory:
        retry = render_template(
            "perspective",
            {
                "weakness_content": segment_text
                + "\n\n(Reply with exactly one category name and nothing else.)"
            },
        )
        return PerspectiveLabel.parse(gateway.complete(retry).text)


_FENCE = re.compile(r"^\s*```")


def parse_impact_reply(reply: str) -> ImpactLabel:
    if _FENCE.match(reply):
        raise JsonShapeError("markdown code fence in reply")
    try:
        obj = json.loads(reply.strip())
    except json.JSONDecodeError as exc:
        raise JsonShapeError(str(exc)) from exc
    if not isinstance(obj, dict) or set(obj) != {"impact"}:
        raise JsonShapeError(f"expected bare {{'impact': ...}} object, got {reply[:60]!r}")
    return ImpactLabel.parse(str(obj["impact"]))


def label_impact(span_text: str, gateway: Gateway) -> ImpactLabel:
    """Classify the author action in one rebuttal span; one retry."""
    req = render_template("impact", {"rebuttal_span": span_text})
    reply = gateway.complete(req).text
    try:
        return parse_impact_reply(reply)
    except (JsonShapeError, UnknownImpact):
        retry = render_template(
            "impact",
            {
                "rebuttal_span": span_text
                + "\n\n(Return the bare JSON object only, no code fences.)"
            },
        )
        return parse_impact_reply(gateway.complete(retry).text)


def severity_group(perspective: PerspectiveLabel) -> str:
    return "major" if perspective in MAJOR_PERSPECTIVES else "minor"


def distribution_report(pairs: list[MappedPair], axis: str) -> dict:
    """Counts and row-normalized percentages along the requested axis.

    Axes: perspective, impact, perspective_x_impact, severity.  The two
    cross axes tabulate impact within each perspective (or severity)
    row; percentages are row-normalized.
    """
    if axis == "perspective":
        counts = Counter(p.perspective for p in pairs if p.perspective)
        total = sum(counts.values())
        return {
            "axis": axis,
            "rows": {
                k: {"count": v, "pct": 100.0 * v / total} for k, v in sorted(counts.items())
            },
        }
    if axis == "impact":
        counts = Counter(p.impact for p in pairs if p.impact)
        total = sum(counts.values())
        return {
            "axis": axis,
            "rows": {
                k: {"count": v, "pct": 100.0 * v / total} for k, v in sorted(counts.items())
            },
        }
    if axis in ("perspective_x_impact", "severity"):
        rows: dict[str, Counter] = {}
        for p in pairs:
            if not (p.perspective and p.impact):
                continue
            key = (
                severity_group(PerspectiveLabel.parse(p.perspective))
                if axis == "severity"
                else p.perspective
            )
            rows.setdefault(key, Counter())[p.impact] += 1
        impact_order = [i.value for i in ImpactLabel]
        out = {}
        for key in sorted(rows):
            row = rows[key]
            total = sum(row.values())
            out[key] = {
                imp: {"count": row.get(imp, 0), "pct": 100.0 * row.get(imp, 0) / total}
                for imp in impact_order
            }
            out[key]["_total"] = total
        return {"axis": axis, "rows": out}
    raise ValueError(f"unknown axis {axis!r}")


def label_pairs(
    pairs: list[MappedPair], gateway: Gateway, drop_miscellaneous: bool = True
) -> tuple[list[MappedPair], int]:
    """Fill perspective and impact on every pair; returns (kept, dropped)."""
    kept: list[MappedPair] = []
    dropped = 0
    for pair in pairs:
        perspective = label_perspective(pair.segment_text, gateway)
        if drop_miscellaneous and perspective is PerspectiveLabel.MISCELLANEOUS:
            dropped += 1
            continue
        pair.perspective = perspective.value
        pair.impact = label_impact(pair.span_text, gateway).value
        kept.append(pair)
    return kept, dropped
