import pytest

from reviewforge.corpus import ReviewDoc
from reviewforge.errors import (
    EmptyBody,
    NonContiguousIndices,
    SegmentationParseError,
)
from reviewforge.segmenter import (
    detect_itemization,
    parse_point_list,
    segment_review,
)


def test_detect_numbered_list():
    text = "1. The baselines are too weak overall.\n2. No ablation study is included at all."
    items = detect_itemization(text)
    assert items == [
        "The baselines are too weak overall.",
        "No ablation study is included at all.",
    ]


def test_detect_wq_prefixes_and_bullets():
    text = "W1: Missing related work discussion.\nW2: Results lack error bars entirely."
    assert len(detect_itemization(text)) == 2
    text = "- The figures are far too small.\n- Notation is inconsistent between sections."
    assert len(detect_itemization(text)) == 2


def test_short_items_merge_forward():
    text = (
        "1. Bad.\n"
        "2. The evaluation protocol is underspecified and needs far more detail.\n"
        "3. Code is unavailable and several hyperparameters are missing."
    )
    items = detect_itemization(text)
    assert len(items) == 2
    assert items[0].startswith("Bad. The evaluation protocol")
    assert all(len(i) >= 15 for i in items)
    # merging below two items means no usable itemization at all
    assert detect_itemization("1. Tiny.\n2. Also this one is long enough to stand alone.") is None


def test_prose_returns_none():
    assert detect_itemization("This is unstructured prose with no enumeration at all.") is None
    assert detect_itemization("") is None


def test_parse_point_list_happy():
    reply = "Point 1: First issue body.\nPoint 2: Second issue body\nspanning two lines."
    parsed = parse_point_list(reply)
    assert parsed == [
        (1, "First issue body."),
        (2, "Second issue body\nspanning two lines."),
    ]


def test_parse_point_list_errors():
    with pytest.raises(SegmentationParseError):
        parse_point_list("no points here")
    with pytest.raises(NonContiguousIndices):
        parse_point_list("Point 1: a body here.\nPoint 3: skipped two.")
    with pytest.raises(EmptyBody):
        parse_point_list("Point 1: \nPoint 2: fine body.")


def test_segment_review_heuristic(mock_gateway):
    review = ReviewDoc(
        reviewer_id="R1",
        full_text="",
        weaknesses_text="1. Baselines are outdated and weak.\n2. Missing significance testing.",
    )
    segs = segment_review("p1", review, mock_gateway)
    assert [s.index_k for s in segs] == [1, 2]
    assert all(s.source == "heuristic" for s in segs)
    assert segs[0].segment_id == "p1/R1/1"


def test_segment_review_llm_fallback(mock_gateway):
    review = ReviewDoc(
        reviewer_id="R2",
        full_text="",
        weaknesses_text=(
            "The evaluation seems thin because only one dataset is used. "
            "Additionally the writing is hard to follow in the method section. "
            "Finally the novelty over prior work is unclear to me."
        ),
    )
    segs = segment_review("p1", review, mock_gateway)
    assert len(segs) >= 1
    assert all(s.source == "llm" for s in segs)
    # deterministic under the mock provider
    again = segment_review("p1", review, mock_gateway)
    assert [s.text for s in segs] == [s.text for s in again]


def test_segment_review_empty_sections(mock_gateway):
    review = ReviewDoc(reviewer_id="R3", full_text="x", weaknesses_text="", questions_text="")
    assert segment_review("p1", review, mock_gateway) == []


def test_segment_review_requires_gateway_for_prose():
    review = ReviewDoc(
        reviewer_id="R4", full_text="", weaknesses_text="Unstructured complaint text here."
    )
    with pytest.raises(SegmentationParseError):
        segment_review("p1", review, None)


def test_round_trip_dict(mock_gateway):
    review = ReviewDoc(
        reviewer_id="R1",
        full_text="",
        weaknesses_text="1. Claims are overstated in the abstract.\n2. Code is not shared anywhere.",
    )
    seg = segment_review("p9", review, mock_gateway)[0]
    from reviewforge.segmenter import ReviewSegment

    assert ReviewSegment.from_dict(seg.to_dict()) == seg
