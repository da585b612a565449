"""Command-line entry point.

Each pipeline stage is exposed standalone with explicit file paths, and
``forge run`` drives the whole graph from one JSON config.  Exit codes:
0 ok, 2 validation or usage error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import pipeline
from .aligner import MappedPair, align_paper
from .dpo import DpoParams, PolicyLogProbs, combined_loss, dpo_loss
from .errors import ForgeError, StageFailure
from .filters import GoldAnnotation, apply_filters, score_mapping_vs_gold
from .gateway import build_gateway
from .jsonl import read_lines, write_all
from .judge import WinMatrix, judge_pointwise, round_robin
from .labels import distribution_report, label_pairs
from .metrics import score_corpus, score_pair
from .pairs import (
    build_preferences,
    build_sft,
    preference_to_chat,
    sft_to_chat,
    split,
)
from .segmenter import ReviewSegment, segment_review
from .service import SessionStore, create_app

logger = logging.getLogger("forge")


def _gateway(args):
    config = {"provider": getattr(args, "provider", "mock")}
    if getattr(args, "base_url", None):
        config["provider"] = "http"
        config["base_url"] = args.base_url
    cache = getattr(args, "cache", None)
    return build_gateway(config, cache_path=cache)


def _load_pairs(path) -> list[MappedPair]:
    lines, _ = read_lines(path)
    return [MappedPair.from_dict(row) for _, row in lines]


def cmd_ingest(args) -> int:
    written, skipped = corpus_mod.ingest_to_file(
        args.source, args.out, strict=args.strict
    )
    print(f"ingested {written} papers ({skipped} skipped) -> {args.out}")
    return 0


def cmd_segment(args) -> int:
    gateway = _gateway(args)
    records, _ = corpus_mod.load_corpus(getattr(args, "in"))
    rows, failures = [], []
    for record in records:
        for review in record.reviews:
            try:
                segs = segment_review(record.paper_id, review, gateway)
            except ForgeError as exc:
                failures.append(f"{record.paper_id}/{review.reviewer_id}")
                logger.warning("segmentation failed: %s", exc)
                continue
            rows.extend(s.to_dict() for s in segs)
    write_all(args.out, rows)
    if args.failures:
        Path(args.failures).write_text(
            json.dumps({"failed_reviews": sorted(failures)}, sort_keys=True) + "\n"
        )
    print(f"wrote {len(rows)} segments ({len(failures)} failed reviews) -> {args.out}")
    return 0


def cmd_align(args) -> int:
    gateway = _gateway(args)
    records = {r.paper_id: r for r in corpus_mod.load_corpus(args.corpus)[0]}
    lines, _ = read_lines(args.segments)
    by_paper: dict[str, list[ReviewSegment]] = {}
    for _, row in lines:
        seg = ReviewSegment.from_dict(row)
        by_paper.setdefault(seg.paper_id, []).append(seg)
    rows = []
    for paper_id in sorted(by_paper):
        record = records.get(paper_id)
        if record is None or record.rebuttal.empty:
            continue
        pairs, _ = align_paper(
            paper_id, by_paper[paper_id], record.rebuttal, gateway, tau=args.tau
        )
        rows.extend(p.to_dict() for p in pairs)
    write_all(args.out, rows)
    print(f"wrote {len(rows)} mapped pairs -> {args.out}")
    return 0


def cmd_filter(args) -> int:
    gateway = _gateway(args)
    pairs = _load_pairs(getattr(args, "in"))
    failed: set[str] = set()
    if args.failures and Path(args.failures).exists():
        failed = set(json.loads(Path(args.failures).read_text())["failed_reviews"])
    retained, report = apply_filters(
        pairs, args.tau, gateway, structurally_failed_reviews=failed
    )
    if args.out:
        write_all(args.out, (p.to_dict() for p in retained))
    Path(args.report).write_text(json.dumps(report.to_dict(), sort_keys=True) + "\n")
    print(f"retained {report.retained}/{report.total}; report -> {args.report}")
    return 0


def cmd_validate(args) -> int:
    pred_lines, _ = read_lines(args.pred)
    gold_lines, _ = read_lines(args.gold)
    pred = {
        row["segment_id"]: tuple(row["span_range"])
        for _, row in pred_lines
        if row.get("span_range")
    }
    gold = {}
    for _, row in gold_lines:
        ann = GoldAnnotation(
            segment_id=row["segment_id"],
            gold_span_range=tuple(row["gold_span_range"]) if row.get("gold_span_range") else None,
        )
        gold[ann.segment_id] = ann.gold_span_range
    p, r, f1 = score_mapping_vs_gold(pred, gold, iou_threshold=args.iou)
    print(json.dumps({"precision": p, "recall": r, "f1": f1}))
    return 0


def cmd_label(args) -> int:
    gateway = _gateway(args)
    pairs = _load_pairs(args.mappings)
    labeled, dropped = label_pairs(pairs, gateway)
    write_all(args.out, (p.to_dict() for p in labeled))
    print(f"labeled {len(labeled)} pairs ({dropped} dropped) -> {args.out}")
    return 0


def cmd_report(args) -> int:
    if args.win_matrix:
        lines, _ = read_lines(args.win_matrix)
        matrix: WinMatrix | None = None
        for _, row in lines:
            if matrix is None:
                matrix = WinMatrix(models=sorted({row["winner"], row["loser"]}))
            for m in (row["winner"], row["loser"]):
                if m not in matrix.models:
                    matrix.models.append(m)
                    matrix.models.sort()
            matrix.record(row["winner"], row["loser"])
        print(json.dumps(matrix.to_dict() if matrix else {}, indent=2, sort_keys=True))
        return 0
    axis = args.axis.replace("×", "_x_")
    if axis not in ("perspective", "impact", "perspective_x_impact", "severity"):
        print(f"error: unknown axis {args.axis!r}", file=sys.stderr)
        return 2
    pairs = _load_pairs(args.labeled)
    print(json.dumps(distribution_report(pairs, axis), indent=2, sort_keys=True))
    return 0


def cmd_build_sft(args) -> int:
    labeled = _load_pairs(args.labeled)
    manuscripts = {
        r.paper_id: r.manuscript for r in corpus_mod.load_corpus(args.corpus)[0]
    }
    examples = build_sft(
        labeled, manuscripts, per_perspective_quota=args.quota, seed=args.seed
    )
    train, test = split(examples, args.holdout, args.seed)
    write_all(args.out_train, (sft_to_chat(e) for e in train))
    write_all(args.out_test, (sft_to_chat(e) for e in test))
    print(f"sft: {len(train)} train / {len(test)} test")
    return 0


def cmd_build_pref(args) -> int:
    labeled = _load_pairs(args.labeled)
    triples = build_preferences(
        labeled,
        cap_per_segment=args.cap,
        seed=args.seed,
        strict_tiers=args.strict_paper_tiers,
    )
    train, test = split(triples, args.holdout, args.seed)
    write_all(args.out_train, (preference_to_chat(t) for t in train))
    write_all(args.out_test, (preference_to_chat(t) for t in test))
    print(f"preferences: {len(train)} train / {len(test)} test")
    return 0


def cmd_eval_auto(args) -> int:
    hyp_lines, _ = read_lines(args.hyp)
    ref_lines, _ = read_lines(args.ref)
    refs = {row["id"]: row["text"] for _, row in ref_lines}
    pairs = []
    for _, row in hyp_lines:
        if row["id"] not in refs:
            print(f"error: hypothesis id {row['id']!r} has no reference", file=sys.stderr)
            return 2
        pairs.append((row["text"], refs[row["id"]]))
    corpus_scores = score_corpus(pairs)
    # report on a 0-100 scale; chrf is already there
    report = {k: (v if k == "chrf" else v * 100.0) for k, v in corpus_scores.items()}
    report["n"] = len(pairs)
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_judge(args) -> int:
    gateway = _gateway(args)
    candidates: dict[str, dict[str, dict]] = {}
    contexts: dict[str, str] = {}
    for path in sorted(Path(args.candidates).glob("*.jsonl")):
        lines, _ = read_lines(path)
        for _, row in lines:
            candidates.setdefault(row["model"], {})[row["paper_id"]] = {
                "text": row["text"],
                "perspective": row.get("perspective", ""),
            }
            contexts.setdefault(row["paper_id"], row.get("paper_content", ""))
    if not candidates:
        print("error: no candidate files found", file=sys.stderr)
        return 2
    papers = sorted(set.intersection(*(set(v) for v in candidates.values())))
    rows = []
    if args.mode == "pairwise":
        overall, per_perspective = round_robin(
            {m: {p: candidates[m][p] for p in papers} for m in candidates},
            papers,
            args.seed,
            gateway,
            paper_contexts=contexts,
        )
        out = {
            "overall": overall.to_dict(),
            "per_perspective": {k: v.to_dict() for k, v in per_perspective.items()},
        }
        Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
        print(f"tournament over {len(papers)} papers -> {args.out}")
        return 0
    for model in sorted(candidates):
        for paper_id in papers:
            cand = candidates[model][paper_id]
            verdict = judge_pointwise(
                contexts.get(paper_id, ""),
                cand["perspective"],
                cand["text"],
                gateway,
                item_id=f"{paper_id}|{model}",
            )
            rows.append(
                {"paper_id": paper_id, "model": model, "scores": verdict.pointwise}
            )
    write_all(args.out, rows)
    print(f"scored {len(rows)} candidates -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    store = SessionStore(args.session)
    app = create_app(store, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_dpo(args) -> int:
    lines, _ = read_lines(getattr(args, "in"))
    rows = []
    for _, row in lines:
        lp = PolicyLogProbs(
            logp_policy_chosen=row["logp_policy_chosen"],
            logp_policy_rejected=row["logp_policy_rejected"],
            logp_ref_chosen=row["logp_ref_chosen"],
            logp_ref_rejected=row["logp_ref_rejected"],
        )
        params = DpoParams(beta=row.get("beta", 0.1), lam=row.get("lambda", 0.1))
        loss, grads = dpo_loss(lp, params)
        rows.append(
            {
                "loss": loss,
                "combined_loss": combined_loss(lp, params),
                "grads": {
                    "d_policy_chosen": grads.d_policy_chosen,
                    "d_policy_rejected": grads.d_policy_rejected,
                    "d_ref_chosen": grads.d_ref_chosen,
                    "d_ref_rejected": grads.d_ref_rejected,
                },
            }
        )
    write_all(args.out, rows)
    print(f"scored {len(rows)} rows -> {args.out}")
    return 0


def cmd_score_pair(args) -> int:
    print(json.dumps(score_pair(args.hyp_text, args.ref_text), sort_keys=True))
    return 0


def cmd_run(args) -> int:
    config = pipeline.default_config()
    if args.config:
        config.update(json.loads(Path(args.config).read_text()))
    if args.tau is not None:
        config["tau"] = args.tau
    if args.run_dir:
        config["run_dir"] = args.run_dir
    stages = args.stages.split(",") if args.stages else None
    manifest = pipeline.run(config, stages=stages, force=args.force)
    print(json.dumps(pipeline.stage_counts(manifest), indent=2, sort_keys=True))
    return 0


def _add_gateway_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", default="mock", choices=("mock", "transcript", "http"))
    p.add_argument("--base-url", default=None)
    p.add_argument("--cache", default=None, help="gateway response cache JSONL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forge")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch submissions into corpus JSONL")
    p.add_argument("--source", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("segment", help="split reviews into critique segments")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--failures", default=None)
    _add_gateway_flags(p)
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("align", help="map segments to rebuttal spans")
    p.add_argument("--segments", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--tau", type=float, default=0.7)
    p.add_argument("--out", required=True)
    _add_gateway_flags(p)
    p.set_defaults(fn=cmd_align)

    p = sub.add_parser("filter", help="drop low-quality mapped pairs")
    p.add_argument("--in", required=True)
    p.add_argument("--tau", type=float, default=0.7)
    p.add_argument("--report", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--failures", default=None)
    _add_gateway_flags(p)
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("validate", help="score predicted spans against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("label", help="attach perspective and impact labels")
    p.add_argument("--mappings", required=True)
    p.add_argument("--out", required=True)
    _add_gateway_flags(p)
    p.set_defaults(fn=cmd_label)

    p = sub.add_parser("report", help="label distributions or win matrices")
    p.add_argument("--labeled", default=None)
    p.add_argument("--axis", default="perspective")
    p.add_argument("--win-matrix", default=None, help="duel log JSONL")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("build-sft", help="sample the SFT corpus")
    p.add_argument("--labeled", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--quota", type=int, default=1900)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--out-train", default="sft_train.jsonl")
    p.add_argument("--out-test", default="sft_test.jsonl")
    p.set_defaults(fn=cmd_build_sft)

    p = sub.add_parser("build-pref", help="build impact-ordered preference triples")
    p.add_argument("--labeled", required=True)
    p.add_argument("--cap", type=int, default=3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--strict-paper-tiers", action="store_true")
    p.add_argument("--out-train", default="pref_train.jsonl")
    p.add_argument("--out-test", default="pref_test.jsonl")
    p.set_defaults(fn=cmd_build_pref)

    p = sub.add_parser("eval-auto", help="corpus metrics over hyp/ref JSONL")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval_auto)

    p = sub.add_parser("judge", help="pointwise scoring or pairwise tournament")
    p.add_argument("--mode", choices=("pointwise", "pairwise"), required=True)
    p.add_argument("--candidates", required=True, help="directory of candidate JSONL")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    _add_gateway_flags(p)
    p.set_defaults(fn=cmd_judge)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--session", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", default=None)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("dpo", help="batch loss/gradient scoring over JSONL")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dpo)

    p = sub.add_parser("score-pair", help="metric scores for one hyp/ref pair")
    p.add_argument("hyp_text")
    p.add_argument("ref_text")
    p.set_defaults(fn=cmd_score_pair)

    p = sub.add_parser("run", help="execute the stage graph from a config")
    p.add_argument("--stages", default="all", help="comma list or 'all'")
    p.add_argument("--config", default=None)
    p.add_argument("--run-dir", default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ForgeError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
