"""Mapping cleanup filters and verification scoring.

Four per-item drop predicates (structural, coverage, confidence,
substance) plus the gold-standard scoring harness: token-IoU span
precision/recall/F1 and Cohen's kappa for inter-annotator agreement.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .aligner import MappedPair
from .errors import DegenerateMarginals, MissingGold
from .gateway import Gateway, render_template

FILTER_NAMES = ("structural", "coverage", "confidence", "substance")


@dataclass
class FilterReport:
    dropped: dict[str, int] = field(default_factory=lambda: {k: 0 for k in FILTER_NAMES})
    retained: int = 0

    @property
    def total(self) -> int:
        return self.retained + sum(self.dropped.values())

    def to_dict(self) -> dict:
        return {"dropped": dict(self.dropped), "retained": self.retained}


@dataclass(frozen=True)
class GoldAnnotation:
    segment_id: str
    gold_span_range: tuple[int, int] | None  # token range; None = NoResponse
    annotator_id: str = ""

    def __post_init__(self):
        r = self.gold_span_range
        if r is not None and not r[0] < r[1]:
            raise ValueError(f"malformed gold range {r} for {self.segment_id}")


def restates_question(segment_text: str, span_text: str, gateway: Gateway) -> bool:
    req = render_template(
        "restatement_check", {"segment_text": segment_text, "rebuttal_span": span_text}
    )
    return gateway.complete(req).text.strip().lower().startswith("yes")


def is_substantive(segment_text: str, gateway: Gateway) -> bool:
    req = render_template("substance_check", {"segment_text": segment_text})
    return gateway.complete(req).text.strip().lower().startswith("yes")


def apply_filters(
    pairs: list[MappedPair],
    tau: float,
    gateway: Gateway,
    structurally_failed_reviews: set[str] | None = None,
    coverage_dropped_segments: int = 0,
) -> tuple[list[MappedPair], FilterReport]:
    """Run the four drop predicates over aligned pairs.

    Each predicate depends only on the item itself, so the retained set
    is independent of filter order.  Segments the aligner left without
    any plausible span never reach this function; their count enters the
    report via ``coverage_dropped_segments``.  ``structurally_failed_reviews``
    holds "{paper_id}/{reviewer_id}" keys of reviews the segmenter could
    not stabilize.
    """
    structurally_failed_reviews = structurally_failed_reviews or set()
    report = FilterReport()
    report.dropped["coverage"] = coverage_dropped_segments
    retained: list[MappedPair] = []
    for pair in pairs:
        review_key = "/".join(pair.segment_id.split("/")[:2])
        if review_key in structurally_failed_reviews:
            report.dropped["structural"] += 1
            continue
        if pair.confidence < tau or restates_question(
            pair.segment_text, pair.span_text, gateway
        ):
            report.dropped["confidence"] += 1
            continue
        if not is_substantive(pair.segment_text, gateway):
            report.dropped["substance"] += 1
            continue
        retained.append(pair)
    report.retained = len(retained)
    return retained, report


def token_iou(a: tuple[int, int], b: tuple[int, int]) -> float:
    """IoU of two half-open token index ranges."""
    inter = max(0, min(a[1], b[1]) - max(a[0], b[0]))
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union if union else 0.0


def score_mapping_vs_gold(
    pred: dict[str, tuple[int, int]],
    gold: dict[str, tuple[int, int] | None],
    iou_threshold: float = 0.5,
) -> tuple[float, float, float]:
    """Span P/R/F1 against adjudicated gold token ranges.

    A prediction is correct iff token IoU with its gold span meets the
    threshold.  NoResponse gold rows (None) are excluded from the recall
    denominator; predicting a span for them counts against precision.
    """
    correct = 0
    for seg_id, span in pred.items():
        if seg_id not in gold:
            raise MissingGold(seg_id)
        g = gold[seg_id]
        if g is not None and token_iou(span, g) >= iou_threshold:
            correct += 1
    n_pred = len(pred)
    n_gold_positive = sum(1 for g in gold.values() if g is not None)
    precision = correct / n_pred if n_pred else 0.0
    recall = correct / n_gold_positive if n_gold_positive else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return precision, recall, f1


def cohens_kappa(labels_a: list, labels_b: list) -> float:
    """kappa = (p_o - p_e) / (1 - p_e) over the shared label set."""
    if len(labels_a) != len(labels_b) or not labels_a:
        raise ValueError("label lists must be equal-length and non-empty")
    n = len(labels_a)
    p_o = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    counts_a = Counter(labels_a)
    counts_b = Counter(labels_b)
    p_e = sum(counts_a[k] * counts_b.get(k, 0) for k in counts_a) / (n * n)
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise DegenerateMarginals("expected agreement is 1 with imperfect observed")
    return (p_o - p_e) / (1.0 - p_e)
