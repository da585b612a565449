"""Acceptance gate: one test per release criterion.

Each test prints a single ``[acceptance] <criterion>: PASS|FAIL`` line so
the gate status is readable from the pytest log.  Criteria reuse the
oracles committed elsewhere in the suite (the step-by-step assignment
simulation, the hand-derived metrics fixture, the golden-run manifest).
"""

import json
import math
import random
import time
from contextlib import contextmanager
from dataclasses import asdict
from itertools import permutations
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from reviewforge import pipeline
from reviewforge.aligner import greedy_assign
from reviewforge.dpo import DpoParams, PolicyLogProbs, dpo_loss
from reviewforge.errors import NotStrictlyOrdered
from reviewforge.filters import cohens_kappa, score_mapping_vs_gold
from reviewforge.judge import agreement_stats, position_balance
from reviewforge.jsonl import dumps
from reviewforge.labels import ImpactLabel
from reviewforge.metrics import METRIC_KEYS, bleu4, chrf, meteor, rouge_l_sum_f1, tokenize
from reviewforge.pairs import build_preferences, classify_tier
from reviewforge.service import create_app

from test_aligner import oracle_assign, random_case
from test_judge import _tournament
from test_pairs import EXPECTED_TIERS, make_labeled_corpus
from test_service import drain, make_store, result_for, submit

GOLDEN = Path(__file__).parent / "fixtures" / "golden"
METRICS_FIXTURE = Path(__file__).parent / "oracles" / "metrics_fixture.json"


@contextmanager
def criterion(name, budget_s):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL")
        raise
    elapsed = time.monotonic() - start
    assert elapsed < budget_s, f"{name} exceeded {budget_s}s budget ({elapsed:.1f}s)"
    print(f"[acceptance] {name}: PASS ({elapsed:.1f}s)")


def test_dpo_math():
    with criterion("dpo-math", 5.0):
        rng = random.Random(42)
        h = 1e-5
        for _ in range(1000):
            lp = PolicyLogProbs(
                rng.uniform(-30, 0), rng.uniform(-30, 0),
                rng.uniform(-30, 0), rng.uniform(-30, 0),
            )
            params = DpoParams(beta=rng.uniform(0.05, 5.0))
            _, grads = dpo_loss(lp, params)
            for fieldname, analytic in (
                ("logp_policy_chosen", grads.d_policy_chosen),
                ("logp_policy_rejected", grads.d_policy_rejected),
            ):
                base = vars(lp)
                plus = PolicyLogProbs(**{**base, fieldname: base[fieldname] + h})
                minus = PolicyLogProbs(**{**base, fieldname: base[fieldname] - h})
                fd = (dpo_loss(plus, params)[0] - dpo_loss(minus, params)[0]) / (2 * h)
                scale = max(abs(analytic), abs(fd), 1e-8)
                assert abs(analytic - fd) / scale < 1e-6
        # zero margin gives exactly ln 2
        loss, _ = dpo_loss(PolicyLogProbs(-3.0, -3.0, -8.0, -8.0), DpoParams(beta=0.7))
        assert loss == pytest.approx(math.log(2.0), abs=1e-12)
        # beta scaling identity
        for _ in range(200):
            m = rng.uniform(-20, 20)
            beta = rng.uniform(0.01, 10.0)
            scaled, _ = dpo_loss(PolicyLogProbs(m, 0.0, 0.0, 0.0), DpoParams(beta=beta))
            unit, _ = dpo_loss(PolicyLogProbs(beta * m, 0.0, 0.0, 0.0), DpoParams(beta=1.0))
            assert scaled == pytest.approx(unit, abs=1e-12)


def test_tier_classifier():
    with criterion("tier-classifier", 1.0):
        codes = [i.value for i in ImpactLabel]
        checked = 0
        for a, b in permutations(codes, 2):
            ia, ib = ImpactLabel.parse(a), ImpactLabel.parse(b)
            for strict in (False, True):
                if ia.rank <= ib.rank:
                    with pytest.raises(NotStrictlyOrdered):
                        classify_tier(ia, ib, strict_tiers=strict)
                elif strict and (a, b) == ("SRP", "VCR"):
                    with pytest.raises(NotStrictlyOrdered):
                        classify_tier(ia, ib, strict_tiers=True)
                else:
                    assert classify_tier(ia, ib, strict_tiers=strict) == EXPECTED_TIERS[(a, b)]
                checked += 1
        assert checked == 40  # 20 ordered pairs under both config modes


def test_pair_builder():
    with criterion("pair-builder", 10.0):
        labeled = make_labeled_corpus(n_papers=50)
        by_key = {(p.paper_id, p.perspective, p.segment_text): p for p in labeled}
        runs = []
        for _ in range(3):
            triples = build_preferences(labeled, cap_per_segment=3, seed=11)
            runs.append("\n".join(dumps(asdict(t)) for t in triples).encode())
        assert runs[0] == runs[1] == runs[2]
        usage: dict[str, int] = {}
        for t in triples:
            cw = by_key[(t.paper_id, t.perspective, t.chosen)]
            cl = by_key[(t.paper_id, t.perspective, t.rejected)]
            assert ImpactLabel.parse(t.chosen_impact).rank > ImpactLabel.parse(t.rejected_impact).rank
            assert cw.paper_id == cl.paper_id == t.paper_id
            assert cw.perspective == cl.perspective == t.perspective
            for seg in (cw.segment_id, cl.segment_id):
                usage[seg] = usage.get(seg, 0) + 1
        assert triples and max(usage.values()) <= 3


def test_greedy_aligner():
    with criterion("greedy-aligner", 30.0):
        rng = random.Random(777)
        for case in range(10_000):
            cands = random_case(rng)
            tau = rng.choice([0.0, 0.5, 0.7, 0.9])
            got = greedy_assign(cands, tau=tau)
            assert got == oracle_assign(cands, tau=tau), (case, tau)
            segs = [s for s, _, _ in got]
            spans = [t for _, t, _ in got]
            assert len(segs) == len(set(segs)) and len(spans) == len(set(spans))
            higher = min(tau + 0.2, 1.0)
            at_higher = greedy_assign(cands, tau=higher)
            assert at_higher == [p for p in got if p[2] >= higher]


def test_metrics_oracle():
    with criterion("metrics-oracle", 5.0):
        impls = {"bleu4": bleu4, "rougeLsum": rouge_l_sum_f1, "meteor": meteor, "chrf": chrf}
        fixture = json.loads(METRICS_FIXTURE.read_text())
        assert len(fixture) == 12
        for row in fixture:
            for key in METRIC_KEYS:
                assert impls[key](row["hyp"], row["ref"]) == pytest.approx(
                    row[key], abs=1e-9
                ), (row["name"], key)
        text = "the ablation study in section five is missing entirely"
        assert bleu4(text, text) == 1.0
        assert rouge_l_sum_f1(text, text) == 1.0
        assert chrf(text, text) == 100.0
        assert meteor(text, text) == 1.0 - 0.5 / len(tokenize(text)) ** 3
        assert bleu4("alpha beta", "gamma delta") == 0.0
        assert rouge_l_sum_f1("alpha beta", "gamma delta") == 0.0
        assert meteor("alpha beta", "gamma delta") == 0.0
        assert chrf("", "") == 0.0


def test_validation_scorer():
    with criterion("validation-scorer", 1.0):
        # IoU 1/3 scores incorrect at the 0.5 threshold
        assert score_mapping_vs_gold({"s1": (0, 2)}, {"s1": (1, 3)}) == (0.0, 0.0, 0.0)
        gold = {"s1": (0, 10), "s2": (10, 20), "s3": None, "s4": (30, 40)}
        pred = {"s1": (0, 10), "s2": (18, 26), "s3": (50, 60)}
        p, r, f1 = score_mapping_vs_gold(pred, gold)
        assert (p, r, f1) == pytest.approx((1 / 3, 1 / 3, 1 / 3))
        labels_a = ["x"] * 25 + ["y"] * 25
        labels_b = ["x"] * 20 + ["y"] * 5 + ["x"] * 10 + ["y"] * 15
        assert cohens_kappa(labels_a, labels_b) == pytest.approx(0.4, abs=1e-12)


def test_judge_harness(mock_gateway):
    with criterion("judge-harness", 20.0):
        overall, _ = _tournament(mock_gateway, n_models=4, n_papers=20)
        for a in overall.models:
            for b in overall.models:
                if a != b:
                    assert overall.cell(a, b) + overall.cell(b, a) == pytest.approx(
                        100.0, abs=1e-9
                    )
        frac = position_balance(200)
        assert abs(frac - 0.5) < 3 * 0.5 / math.sqrt(200)


# Per-model actionability means, human and judge columns.  Their rank
# correlations come out at rho=0.8833 and tau_b=0.7778, which misses the
# recorded rho=0.94 / tau_b=0.87 targets by far more than the 1e-2
# tolerance, so this criterion cannot pass with the stated fixture.
HUMAN_ACTIONABILITY = [3.46, 3.28, 3.38, 3.15, 3.22, 3.06, 3.20, 3.27, 3.14]
JUDGE_ACTIONABILITY = [3.38, 3.18, 3.28, 3.13, 3.11, 3.03, 3.19, 3.23, 3.08]


@pytest.mark.xfail(
    strict=True,
    reason="actionability-mean fixture yields rho=0.883 / tau_b=0.778, "
    "not the recorded 0.94 / 0.87",
)
def test_judge_agreement_recorded_correlations():
    with criterion("judge-agreement-correlations", 20.0):
        human = {("p0", f"m{i}"): v for i, v in enumerate(HUMAN_ACTIONABILITY)}
        judge = {("p0", f"m{i}"): v for i, v in enumerate(JUDGE_ACTIONABILITY)}
        stats = agreement_stats(human, judge)
        assert stats["spearman_model_level"] == pytest.approx(0.94, abs=1e-2)
        assert stats["kendall_tau_b"] == pytest.approx(0.87, abs=1e-2)


def test_golden_run(tmp_path):
    with criterion("golden-run", 60.0):
        expected = json.loads((GOLDEN / "expected_manifest.json").read_text())
        manifests = []
        for name in ("run_a", "run_b"):
            config = pipeline.default_config()
            config["source"] = str(GOLDEN / "dump")
            config["run_dir"] = str(tmp_path / name)
            manifests.append(pipeline.run(config))
        for stage, entry in expected.items():
            assert manifests[0]["stages"][stage]["counts"] == entry["counts"], stage
            assert manifests[0]["stages"][stage]["outputs"] == entry["outputs"], stage
        for names in pipeline._OUTPUTS.values():
            for name in names:
                a = (tmp_path / "run_a" / name).read_bytes()
                b = (tmp_path / "run_b" / name).read_bytes()
                assert a == b, name


def test_released_dataset_aggregates():
    # Non-gating: requires the released mapping corpus on disk.
    import os

    path = os.environ.get("RMR75K_PATH")
    if not path or not Path(path).exists():
        pytest.skip("released dataset not available (set RMR75K_PATH); non-gating")
    rows = sum(1 for _ in open(Path(path) / "mappings.jsonl", encoding="utf-8"))
    assert rows == 75_542


def test_service_without_ui(tmp_path):
    with criterion("service-without-ui", 10.0):
        store = make_store(tmp_path)
        client = TestClient(create_app(store))
        # root serves the fallback page when no built frontend is present
        assert "JSON API" in client.get("/").text
        for annotator in ("ann1", "ann2"):
            tasks = drain(client, annotator)
            assert len(tasks) == 3
            for task in tasks:
                assert submit(client, task, annotator, result_for(task)).status_code == 200
        export = client.get("/api/export").json()
        assert export["pairwise_kappa"]["ann1|ann2"] == 1.0
