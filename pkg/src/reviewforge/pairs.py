"""SFT corpus and impact-ordered preference set construction."""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass

from .aligner import MappedPair
from .errors import NotStrictlyOrdered, QuotaUnmetWarning
from .labels import ImpactLabel, TRAINING_PERSPECTIVES

DEFAULT_CAP_PER_SEGMENT = 3
SFT_SYSTEM_PROMPT = (
    "You are a professional reviewer. Provide a comment such as weakness, question or "
    "suggestion on the given paper in 1 to 3 sentences."
)


@dataclass(frozen=True)
class SftExample:
    paper_id: str
    perspective: str
    prompt_context: str
    target: str
    truncated: bool = False


@dataclass(frozen=True)
class PreferenceTriple:
    paper_id: str
    perspective: str
    chosen: str
    rejected: str
    chosen_impact: str
    rejected_impact: str
    tier: str


_TIER_SETS = {
    "large": {("CRP", "DWC"), ("CRP", "DRF")},
    "medium": {("SRP", "DWC"), ("SRP", "DRF"), ("CRP", "VCR")},
    "small": {("CRP", "SRP"), ("VCR", "DWC"), ("VCR", "DRF"), ("DWC", "DRF")},
}


def classify_tier(
    winner: ImpactLabel, loser: ImpactLabel, strict_tiers: bool = False
) -> str:
    """Map a strictly ordered impact pair to its difficulty tier.

    The published tier sets omit SRP>VCR; by default it classifies as
    medium, while strict_tiers raises for it.
    """
    if winner.rank <= loser.rank:
        raise NotStrictlyOrdered(f"{winner.value} !> {loser.value}")
    key = (winner.value, loser.value)
    for tier, pairs in _TIER_SETS.items():
        if key in pairs:
            return tier
    # only SRP>VCR reaches here among strictly ordered pairs
    if strict_tiers:
        raise NotStrictlyOrdered(f"{winner.value}>{loser.value} not in any tier set")
    return "medium"


def _eligible_by_perspective(labeled: list[MappedPair]) -> dict[str, list[MappedPair]]:
    out: dict[str, list[MappedPair]] = {p.value: [] for p in TRAINING_PERSPECTIVES}
    for pair in labeled:
        if pair.perspective in out and pair.impact:
            out[pair.perspective].append(pair)
    return out


def build_sft(
    labeled: list[MappedPair],
    manuscripts: dict[str, str],
    per_perspective_quota: int,
    seed: int,
    context_char_budget: int | None = None,
) -> list[SftExample]:
    """Sample up to quota examples per perspective, one per (paper, perspective).

    Sampling is uniform over eligible papers and deterministic under the
    seed.  Contexts over the character budget are truncated from the end
    and flagged.
    """
    if per_perspective_quota < 1:
        raise ValueError("quota must be >= 1")
    rng = random.Random(seed)
    out: list[SftExample] = []
    by_perspective = _eligible_by_perspective(labeled)
    for perspective in (p.value for p in TRAINING_PERSPECTIVES):
        by_paper: dict[str, list[MappedPair]] = {}
        for pair in by_perspective[perspective]:
            by_paper.setdefault(pair.paper_id, []).append(pair)
        papers = sorted(by_paper)
        rng.shuffle(papers)
        if len(papers) < per_perspective_quota:
            warnings.warn(
                f"{perspective}: only {len(papers)} eligible papers for quota "
                f"{per_perspective_quota}",
                QuotaUnmetWarning,
                stacklevel=2,
            )
        for paper_id in papers[:per_perspective_quota]:
            candidates = sorted(by_paper[paper_id], key=lambda p: p.segment_id)
            pick = rng.choice(candidates)
            context = manuscripts.get(paper_id, "")
            truncated = False
            if context_char_budget is not None and len(context) > context_char_budget:
                context = context[:context_char_budget]
                truncated = True
            out.append(
                SftExample(
                    paper_id=paper_id,
                    perspective=perspective,
                    prompt_context=context,
                    target=pick.segment_text,
                    truncated=truncated,
                )
            )
    return out


def build_preferences(
    labeled: list[MappedPair],
    cap_per_segment: int = DEFAULT_CAP_PER_SEGMENT,
    seed: int = 0,
    strict_tiers: bool = False,
) -> list[PreferenceTriple]:
    """Enumerate strictly ordered same-(paper, perspective) pairs, then select.

    Selection is a seeded greedy draw that always serves the currently
    least-represented perspective bucket and enforces the per-segment
    cap on both sides of each triple.
    """
    rng = random.Random(seed)
    buckets: dict[str, list[tuple[MappedPair, MappedPair, str]]] = {}
    by_group: dict[tuple[str, str], list[MappedPair]] = {}
    for pair in labeled:
        if pair.perspective and pair.impact:
            by_group.setdefault((pair.paper_id, pair.perspective), []).append(pair)
    for (paper_id, perspective), members in sorted(by_group.items()):
        members = sorted(members, key=lambda p: p.segment_id)
        for w in members:
            for l in members:
                iw, il = ImpactLabel.parse(w.impact), ImpactLabel.parse(l.impact)
                if iw.rank <= il.rank:
                    continue
                try:
                    tier = classify_tier(iw, il, strict_tiers=strict_tiers)
                except NotStrictlyOrdered:
                    continue
                buckets.setdefault(perspective, []).append((w, l, tier))
    for candidates in buckets.values():
        rng.shuffle(candidates)
    usage: dict[str, int] = {}
    counts: dict[str, int] = {p: 0 for p in buckets}
    out: list[PreferenceTriple] = []
    while buckets:
        perspective = min(buckets, key=lambda p: (counts[p], p))
        candidates = buckets[perspective]
        emitted = False
        while candidates:
            w, l, tier = candidates.pop()
            if usage.get(w.segment_id, 0) >= cap_per_segment:
                continue
            if usage.get(l.segment_id, 0) >= cap_per_segment:
                continue
            usage[w.segment_id] = usage.get(w.segment_id, 0) + 1
            usage[l.segment_id] = usage.get(l.segment_id, 0) + 1
            counts[perspective] += 1
            out.append(
                PreferenceTriple(
                    paper_id=w.paper_id,
                    perspective=perspective,
                    chosen=w.segment_text,
                    rejected=l.segment_text,
                    chosen_impact=w.impact,
                    rejected_impact=l.impact,
                    tier=tier,
                )
            )
            emitted = True
            break
        if not candidates:
            del buckets[perspective]
    return out


def split(items: list, holdout_fraction: float, seed: int, paper_id_of=None):
    """Paper-level train/test split; no paper straddles the boundary."""
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError("holdout fraction must be in (0, 1)")
    paper_id_of = paper_id_of or (lambda item: item.paper_id)
    papers = sorted({paper_id_of(it) for it in items})
    rng = random.Random(seed)
    rng.shuffle(papers)
    n_test = round(holdout_fraction * len(papers))
    test_papers = set(papers[:n_test])
    train = [it for it in items if paper_id_of(it) not in test_papers]
    test = [it for it in items if paper_id_of(it) in test_papers]
    return train, test


def sft_to_chat(example: SftExample) -> dict:
    """Chat-style export row: {system, user, assistant}."""
    return {
        "system": SFT_SYSTEM_PROMPT,
        "user": (
            f"Request: From the perspective of {example.perspective}, provide a comment "
            f"on the following paper.\n{example.prompt_context}"
        ),
        "assistant": example.target,
        "paper_id": example.paper_id,
        "perspective": example.perspective,
        "truncated": example.truncated,
    }


def preference_to_chat(triple: PreferenceTriple) -> dict:
    """Chat-style export row: {system, user, chosen, rejected}."""
    return {
        "system": SFT_SYSTEM_PROMPT,
        "user": (
            f"Request: From the perspective of {triple.perspective}, provide a comment "
            f"on the following paper.\n"
        ),
        "chosen": triple.chosen,
        "rejected": triple.rejected,
        "paper_id": triple.paper_id,
        "perspective": triple.perspective,
        "chosen_impact": triple.chosen_impact,
        "rejected_impact": triple.rejected_impact,
        "tier": triple.tier,
    }
