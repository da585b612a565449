"""LLM-as-judge scoring: pointwise rubric, pairwise tournaments, agreement.

Pairwise duels randomize A/B slot assignment per (pair, seed) to offset
position bias; win matrices aggregate row-beats-column percentages with
failed duels excluded from both cells symmetrically.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from itertools import combinations

from scipy import stats

from .errors import InsufficientData, JudgeParseError, TieEmitted
from .gateway import Gateway, render_template

logger = logging.getLogger(__name__)

DIMENSIONS = ("actionability", "specificity", "groundedness", "relevance", "helpfulness")


@dataclass
class JudgeVerdict:
    mode: str  # pointwise | pairwise
    item_id: str
    raw: str
    position_seed: int = 0
    pointwise: dict | None = None  # {dim: score, dim_reasoning: str}
    pairwise: dict | None = None  # {"winner": identity, "justification": str}


_FENCE = re.compile(r"^\s*```")


def _parse_json_reply(raw: str) -> dict:
    if _FENCE.match(raw):
        raise JudgeParseError("markdown code fence in judge reply")
    try:
        obj = json.loads(raw.strip())
    except json.JSONDecodeError as exc:
        raise JudgeParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise JudgeParseError("judge reply is not a JSON object")
    return obj


def parse_pointwise_reply(raw: str) -> dict:
    obj = _parse_json_reply(raw)
    out = {}
    for dim in DIMENSIONS:
        score_key, reason_key = f"{dim}_score", f"{dim}_reasoning"
        if score_key not in obj or reason_key not in obj:
            raise JudgeParseError(f"missing {score_key} or {reason_key}")
        score = obj[score_key]
        if not isinstance(score, int) or not 1 <= score <= 5:
            raise JudgeParseError(f"{score_key}={score!r} outside 1..5")
        out[dim] = score
        out[reason_key] = str(obj[reason_key])
    return out


def judge_pointwise(
    paper_context: str,
    perspective: str,
    candidate: str,
    gateway: Gateway,
    item_id: str = "",
) -> JudgeVerdict:
    """Score one candidate on the five 1..5 dimensions; one corrective retry."""
    if not candidate.strip():
        raise ValueError("empty candidate")
    variables = {
        "paper_content": paper_context,
        "perspective": perspective,
        "review_text": candidate,
    }
    raw = gateway.complete(render_template("judge_pointwise", variables)).text
    try:
        scores = parse_pointwise_reply(raw)
    except JudgeParseError:
        variables["review_text"] = candidate + "\n\n(Return the raw JSON object only.)"
        raw = gateway.complete(render_template("judge_pointwise", variables)).text
        scores = parse_pointwise_reply(raw)
    return JudgeVerdict(mode="pointwise", item_id=item_id, raw=raw, pointwise=scores)


def slot_assignment(seed: int, item_id: str) -> bool:
    """True when the first candidate takes slot A; stable per (seed, item)."""
    digest = hashlib.sha256(f"{seed}|{item_id}".encode("utf-8")).digest()
    return digest[0] % 2 == 0


def judge_pairwise(
    paper_context: str,
    perspective: str,
    cand_x: tuple[str, str],
    cand_y: tuple[str, str],
    seed: int,
    gateway: Gateway,
    item_id: str = "",
) -> JudgeVerdict:
    """Duel two (identity, text) candidates; winner mapped back to identity."""
    (id_x, text_x), (id_y, text_y) = cand_x, cand_y
    if not text_x.strip() or not text_y.strip():
        raise ValueError("empty candidate text")
    x_is_a = slot_assignment(seed, item_id or f"{id_x}|{id_y}")
    seg_a, seg_b = (text_x, text_y) if x_is_a else (text_y, text_x)
    raw = gateway.complete(
        render_template(
            "judge_pairwise",
            {
                "perspective": perspective,
                "paper_content": paper_context,
                "segment_a": seg_a,
                "segment_b": seg_b,
            },
        )
    ).text
    obj = _parse_json_reply(raw)
    winner_slot = str(obj.get("winner", "")).strip().upper()
    if winner_slot not in ("A", "B"):
        raise TieEmitted(f"winner={obj.get('winner')!r}")
    if winner_slot == "A":
        winner = id_x if x_is_a else id_y
    else:
        winner = id_y if x_is_a else id_x
    return JudgeVerdict(
        mode="pairwise",
        item_id=item_id,
        raw=raw,
        position_seed=seed,
        pairwise={"winner": winner, "justification": str(obj.get("justification", ""))},
    )


@dataclass
class WinMatrix:
    models: list[str]
    wins: dict[tuple[str, str], int] = field(default_factory=dict)
    duels: dict[tuple[str, str], int] = field(default_factory=dict)
    failed: int = 0

    def record(self, winner: str, loser: str) -> None:
        key = tuple(sorted((winner, loser)))
        self.duels[key] = self.duels.get(key, 0) + 1
        self.wins[(winner, loser)] = self.wins.get((winner, loser), 0) + 1

    def cell(self, row: str, col: str) -> float | None:
        """Row-over-column win percentage; None when no completed duel."""
        key = tuple(sorted((row, col)))
        n = self.duels.get(key, 0)
        if n == 0:
            return None
        return 100.0 * self.wins.get((row, col), 0) / n

    def to_dict(self) -> dict:
        return {
            "models": self.models,
            "cells": {
                row: {col: self.cell(row, col) for col in self.models if col != row}
                for row in self.models
            },
            "failed_duels": self.failed,
        }


def round_robin(
    candidates_by_model: dict[str, dict[str, dict]],
    papers: list[str],
    seed: int,
    gateway: Gateway,
    paper_contexts: dict[str, str] | None = None,
) -> tuple[WinMatrix, dict[str, WinMatrix]]:
    """One duel per unordered model pair per paper.

    ``candidates_by_model[model][paper_id]`` is {"text": ..., "perspective": ...}.
    Returns the overall matrix and per-perspective matrices.
    """
    models = sorted(candidates_by_model)
    for model in models:
        missing = [p for p in papers if p not in candidates_by_model[model]]
        if missing:
            raise ValueError(f"{model} missing candidates for papers {missing[:3]}")
    paper_contexts = paper_contexts or {}
    overall = WinMatrix(models=models)
    per_perspective: dict[str, WinMatrix] = {}
    for paper_id in papers:
        for m1, m2 in combinations(models, 2):
            c1 = candidates_by_model[m1][paper_id]
            c2 = candidates_by_model[m2][paper_id]
            perspective = c1.get("perspective", "")
            item_id = f"{paper_id}|{m1}|{m2}"
            try:
                verdict = judge_pairwise(
                    paper_contexts.get(paper_id, ""),
                    perspective,
                    (m1, c1["text"]),
                    (m2, c2["text"]),
                    seed,
                    gateway,
                    item_id=item_id,
                )
            except JudgeParseError as exc:
                logger.warning("duel %s failed: %s", item_id, exc)
                overall.failed += 1
                continue
            winner = verdict.pairwise["winner"]
            loser = m2 if winner == m1 else m1
            overall.record(winner, loser)
            if perspective:
                per_perspective.setdefault(perspective, WinMatrix(models=models)).record(
                    winner, loser
                )
    return overall, per_perspective


def agreement_stats(
    human_scores: dict[tuple[str, str], float],
    judge_scores: dict[tuple[str, str], float],
) -> dict[str, float]:
    """Rank agreement between human and judge score tables.

    Keys are (paper_id, model) cells.  Model-level statistics correlate
    per-model means; item-level Spearman runs over matched cells.
    """
    shared = sorted(set(human_scores) & set(judge_scores))
    if not shared:
        raise InsufficientData("no matched cells")
    models = sorted({m for _, m in shared})
    if len(models) < 3:
        raise InsufficientData("need >= 3 models for model-level ranks")
    h_means, j_means = [], []
    for model in models:
        cells = [key for key in shared if key[1] == model]
        h_means.append(sum(human_scores[k] for k in cells) / len(cells))
        j_means.append(sum(judge_scores[k] for k in cells) / len(cells))
    rho_model = stats.spearmanr(h_means, j_means).statistic
    tau_b = stats.kendalltau(h_means, j_means).statistic
    h_items = [human_scores[k] for k in shared]
    j_items = [judge_scores[k] for k in shared]
    rho_item = stats.spearmanr(h_items, j_items).statistic if len(shared) >= 3 else float("nan")
    return {
        "spearman_model_level": float(rho_model),
        "kendall_tau_b": float(tau_b),
        "spearman_item_level": float(rho_item),
    }


def strength_buckets(
    ratings: dict[str, float],
    scores: dict[str, float],
    baseline_scores: dict[str, float] | None = None,
) -> list[dict]:
    """Tertile split by mean reviewer rating: Weak / Medium / Strong rows."""
    papers = sorted(ratings)
    if len(papers) < 3:
        raise InsufficientData("need >= 3 papers for tertiles")
    ordered = sorted(papers, key=lambda p: (ratings[p], p))
    n = len(ordered)
    cut1, cut2 = (n + 2) // 3, (n + 2) // 3 + (n + 1) // 3
    buckets = [
        ("Weak", ordered[:cut1]),
        ("Medium", ordered[cut1:cut2]),
        ("Strong", ordered[cut2:]),
    ]
    rows = []
    for name, members in buckets:
        mean_score = sum(scores.get(p, 0.0) for p in members) / len(members)
        row = {"bucket": name, "papers": len(members), "mean_score": mean_score}
        if baseline_scores is not None:
            base = sum(baseline_scores.get(p, 0.0) for p in members) / len(members)
            row["delta_vs_baseline"] = mean_score - base
        rows.append(row)
    return rows


def position_balance(seed_count: int, item_id: str = "balance-probe") -> float:
    """Fraction of seeds assigning the first candidate to slot A."""
    hits = sum(1 for s in range(seed_count) if slot_assignment(s, item_id))
    return hits / seed_count
