import json
import math

import pytest

from reviewforge.errors import InsufficientData, JudgeParseError, TieEmitted
from reviewforge.gateway import Gateway
from reviewforge.judge import (
    DIMENSIONS,
    WinMatrix,
    agreement_stats,
    judge_pairwise,
    judge_pointwise,
    parse_pointwise_reply,
    position_balance,
    round_robin,
    slot_assignment,
    strength_buckets,
)


def valid_pointwise_json(score=4):
    obj = {}
    for d in DIMENSIONS:
        obj[f"{d}_score"] = score
        obj[f"{d}_reasoning"] = "because"
    return json.dumps(obj)


def test_parse_pointwise_reply():
    parsed = parse_pointwise_reply(valid_pointwise_json())
    assert all(parsed[d] == 4 for d in DIMENSIONS)
    with pytest.raises(JudgeParseError):
        parse_pointwise_reply("```json\n{}\n```")
    with pytest.raises(JudgeParseError):
        parse_pointwise_reply("[1, 2]")
    bad = json.loads(valid_pointwise_json())
    bad["actionability_score"] = 6
    with pytest.raises(JudgeParseError):
        parse_pointwise_reply(json.dumps(bad))
    del bad["actionability_score"]
    with pytest.raises(JudgeParseError):
        parse_pointwise_reply(json.dumps(bad))


class ScriptedProvider:
    name = "scripted"

    def __init__(self, replies):
        self.replies = list(replies)

    def complete(self, req):
        return self.replies.pop(0)


def test_judge_pointwise_mock(mock_gateway):
    verdict = judge_pointwise(
        "paper context", "Experiments", "Add an ablation to Table 2.", mock_gateway
    )
    assert verdict.mode == "pointwise"
    assert all(1 <= verdict.pointwise[d] <= 5 for d in DIMENSIONS)
    again = judge_pointwise(
        "paper context", "Experiments", "Add an ablation to Table 2.", mock_gateway
    )
    assert again.pointwise == verdict.pointwise
    with pytest.raises(ValueError):
        judge_pointwise("ctx", "Theory", "   ", mock_gateway)


def test_judge_pointwise_corrective_retry():
    gw = Gateway(ScriptedProvider(["garbage", valid_pointwise_json(3)]))
    verdict = judge_pointwise("ctx", "Theory", "candidate text", gw)
    assert verdict.pointwise["actionability"] == 3
    gw = Gateway(ScriptedProvider(["garbage", "still garbage"]))
    with pytest.raises(JudgeParseError):
        judge_pointwise("ctx", "Theory", "candidate text", gw)


def test_slot_assignment_stable_and_balanced():
    assert slot_assignment(7, "item") == slot_assignment(7, "item")
    frac = position_balance(200)
    sigma = 0.5 / math.sqrt(200)
    assert abs(frac - 0.5) < 3 * sigma
    # varies across items too, not only seeds
    outcomes = {slot_assignment(0, f"item{i}") for i in range(50)}
    assert outcomes == {True, False}


def test_judge_pairwise_maps_slots_back(mock_gateway):
    strong = ("model_strong", "Add seeds and report variance in Table 3, Section 5.")
    weak = ("model_weak", "The paper could perhaps be polished somewhat.")
    for seed in range(8):
        verdict = judge_pairwise(
            "ctx", "Experiments", strong, weak, seed, mock_gateway, item_id=f"i{seed}"
        )
        assert verdict.pairwise["winner"] == "model_strong"
        flipped = judge_pairwise(
            "ctx", "Experiments", weak, strong, seed, mock_gateway, item_id=f"i{seed}"
        )
        assert flipped.pairwise["winner"] == "model_strong"


def test_judge_pairwise_tie_raises():
    gw = Gateway(ScriptedProvider([json.dumps({"winner": "Tie"})]))
    with pytest.raises(TieEmitted):
        judge_pairwise("ctx", "Theory", ("a", "x"), ("b", "y"), 0, gw, item_id="i")


def test_win_matrix_cells():
    m = WinMatrix(models=["a", "b"])
    assert m.cell("a", "b") is None
    m.record("a", "b")
    m.record("a", "b")
    m.record("b", "a")
    assert m.cell("a", "b") == pytest.approx(200 / 3)
    assert m.cell("b", "a") == pytest.approx(100 / 3)


def _tournament(mock_gateway, n_models=4, n_papers=20):
    perspectives = ["Experiments", "Theory", "Writing", "Evaluation"]
    candidates = {}
    for mi in range(n_models):
        model = f"model{mi}"
        candidates[model] = {}
        for pi in range(n_papers):
            paper = f"paper{pi:03d}"
            candidates[model][paper] = {
                "text": (
                    f"Candidate {model} for {paper}: add a table with {mi + pi} seeds "
                    f"and report Section {1 + (mi * pi) % 5} details."
                ),
                "perspective": perspectives[pi % 4],
            }
    papers = sorted(candidates["model0"])
    return round_robin(candidates, papers, seed=7, gateway=mock_gateway)


def test_round_robin_antisymmetry_4x20(mock_gateway):
    overall, per_perspective = _tournament(mock_gateway)
    models = overall.models
    assert len(models) == 4
    for a in models:
        for b in models:
            if a == b:
                continue
            ca, cb = overall.cell(a, b), overall.cell(b, a)
            assert ca is not None
            assert ca + cb == pytest.approx(100.0, abs=1e-9)
    total_duels = sum(overall.duels.values())
    assert total_duels + overall.failed == 6 * 20
    for matrix in per_perspective.values():
        for a in models:
            for b in models:
                if a != b and matrix.cell(a, b) is not None:
                    assert matrix.cell(a, b) + matrix.cell(b, a) == pytest.approx(100.0)


def test_round_robin_requires_full_coverage(mock_gateway):
    candidates = {
        "m1": {"p1": {"text": "t", "perspective": "Theory"}},
        "m2": {},
    }
    with pytest.raises(ValueError):
        round_robin(candidates, ["p1"], 0, mock_gateway)


def test_agreement_stats_perfect_and_inverted():
    human = {}
    judge = {}
    inverted = {}
    for mi, mean in enumerate([3.0, 3.2, 3.4, 3.6]):
        for pi in range(3):
            key = (f"p{pi}", f"m{mi}")
            human[key] = mean + 0.01 * pi
            judge[key] = mean / 2 + 0.005 * pi
            inverted[key] = -human[key]
    stats = agreement_stats(human, judge)
    assert stats["spearman_model_level"] == pytest.approx(1.0)
    assert stats["kendall_tau_b"] == pytest.approx(1.0)
    assert stats["spearman_item_level"] == pytest.approx(1.0)
    assert agreement_stats(human, inverted)["spearman_model_level"] == pytest.approx(-1.0)
    with pytest.raises(InsufficientData):
        agreement_stats({("p", "m1"): 1.0, ("p", "m2"): 2.0}, {("p", "m1"): 1.0, ("p", "m2"): 2.0})
    with pytest.raises(InsufficientData):
        agreement_stats(human, {})


def test_strength_buckets():
    ratings = {f"p{i}": float(i) for i in range(9)}
    scores = {f"p{i}": 10.0 + i for i in range(9)}
    baseline = {f"p{i}": 10.0 for i in range(9)}
    rows = strength_buckets(ratings, scores, baseline)
    assert [r["bucket"] for r in rows] == ["Weak", "Medium", "Strong"]
    assert [r["papers"] for r in rows] == [3, 3, 3]
    assert rows[0]["mean_score"] == pytest.approx(11.0)
    assert rows[2]["delta_vs_baseline"] == pytest.approx(7.0)
    with pytest.raises(InsufficientData):
        strength_buckets({"p": 1.0}, {"p": 1.0})
