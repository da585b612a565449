"""Stage orchestration over a run directory.

Stages form a static dependency graph; each stage's effective config
hash folds in its upstream hashes, so changing one parameter reruns
exactly the affected suffix of the graph.  Outputs are JSONL artifacts
plus a JSON manifest of config hashes, digests, and counts.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from . import corpus as corpus_mod
from .aligner import MappedPair, align_paper
from .errors import SegmentationParseError, StageFailure, StaleInput
from .filters import apply_filters
from .gateway import Gateway, build_gateway
from .jsonl import read_lines, write_all
from .labels import label_pairs
from .pairs import (
    build_preferences,
    build_sft,
    preference_to_chat,
    sft_to_chat,
    split,
)
from .segmenter import ReviewSegment, segment_review

logger = logging.getLogger(__name__)

STAGE_ORDER = ("ingest", "segment", "align", "filter", "label", "build-sft", "build-pref")

_PARENTS = {
    "ingest": (),
    "segment": ("ingest",),
    "align": ("segment",),
    "filter": ("align",),
    "label": ("filter",),
    "build-sft": ("label",),
    "build-pref": ("label",),
}

_OUTPUTS = {
    "ingest": ("corpus.jsonl",),
    "segment": ("segments.jsonl", "segment_failures.json"),
    "align": ("mappings.jsonl", "align_meta.json"),
    "filter": ("filtered.jsonl", "filter_report.json"),
    "label": ("labeled.jsonl",),
    "build-sft": ("sft_train.jsonl", "sft_test.jsonl"),
    "build-pref": ("pref_train.jsonl", "pref_test.jsonl"),
}


def default_config() -> dict:
    return {
        "source": "",
        "run_dir": "runs/default",
        "tau": 0.7,
        "quota": 1900,
        "cap_per_segment": 3,
        "holdout": 0.1,
        "strict_tiers": False,
        "context_char_budget": 40000,
        "seeds": {"segment": 7, "pairs": 7, "split": 7, "judge": 7},
        "gateway": {"pipeline_model": {"provider": "mock"}, "judge_model": {"provider": "mock"}},
    }


def _stage_params(config: dict, stage: str) -> dict:
    gw = config.get("gateway", {}).get("pipeline_model", {})
    seeds = config.get("seeds", {})
    return {
        "ingest": {"source": config.get("source", "")},
        "segment": {"gateway": gw, "seed": seeds.get("segment", 7)},
        "align": {"tau": config.get("tau", 0.7), "gateway": gw},
        "filter": {"tau": config.get("tau", 0.7), "gateway": gw},
        "label": {"gateway": gw},
        "build-sft": {
            "quota": config.get("quota", 1900),
            "seed": seeds.get("pairs", 7),
            "split_seed": seeds.get("split", 7),
            "holdout": config.get("holdout", 0.1),
            "budget": config.get("context_char_budget"),
        },
        "build-pref": {
            "cap": config.get("cap_per_segment", 3),
            "seed": seeds.get("pairs", 7),
            "split_seed": seeds.get("split", 7),
            "holdout": config.get("holdout", 0.1),
            "strict_tiers": config.get("strict_tiers", False),
        },
    }[stage]


def effective_hash(config: dict, stage: str) -> str:
    payload = {
        "params": _stage_params(config, stage),
        "parents": {p: effective_hash(config, p) for p in _PARENTS[stage]},
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


@dataclass
class RunContext:
    config: dict
    run_dir: Path

    def path(self, name: str) -> Path:
        return self.run_dir / name

    def gateway(self) -> Gateway:
        return build_gateway(
            self.config.get("gateway", {}).get("pipeline_model", {"provider": "mock"}),
            cache_path=self.path("gateway_cache.jsonl"),
        )


def stage_ingest(ctx: RunContext) -> dict:
    written, skipped = corpus_mod.ingest_to_file(
        ctx.config["source"], ctx.path("corpus.jsonl")
    )
    return {"papers": written, "skipped": skipped}


def stage_segment(ctx: RunContext) -> dict:
    gateway = ctx.gateway()
    records, _ = corpus_mod.load_corpus(ctx.path("corpus.jsonl"))
    segments: list[dict] = []
    failures: list[str] = []
    n_reviews = 0
    for record in records:
        if not record.alignment_eligible:
            continue
        for review in record.reviews:
            n_reviews += 1
            try:
                segs = segment_review(record.paper_id, review, gateway)
            except SegmentationParseError:
                failures.append(f"{record.paper_id}/{review.reviewer_id}")
                continue
            segments.extend(s.to_dict() for s in segs)
    write_all(ctx.path("segments.jsonl"), segments)
    ctx.path("segment_failures.json").write_text(
        json.dumps({"failed_reviews": sorted(failures)}, indent=0, sort_keys=True) + "\n"
    )
    return {"reviews": n_reviews, "segments": len(segments), "failed_reviews": len(failures)}


def stage_align(ctx: RunContext) -> dict:
    gateway = ctx.gateway()
    tau = float(ctx.config.get("tau", 0.7))
    records = {
        r.paper_id: r for r in corpus_mod.load_corpus(ctx.path("corpus.jsonl"))[0]
    }
    lines, _ = read_lines(ctx.path("segments.jsonl"))
    by_paper: dict[str, list[ReviewSegment]] = {}
    for _, row in lines:
        seg = ReviewSegment.from_dict(row)
        by_paper.setdefault(seg.paper_id, []).append(seg)
    mapped: list[dict] = []
    coverage_dropped = 0
    for paper_id in sorted(by_paper):
        record = records.get(paper_id)
        if record is None or record.rebuttal.empty:
            continue
        pairs, _registry = align_paper(
            paper_id, by_paper[paper_id], record.rebuttal, gateway, tau=tau
        )
        coverage_dropped += len(by_paper[paper_id]) - len(pairs)
        mapped.extend(p.to_dict() for p in pairs)
    write_all(ctx.path("mappings.jsonl"), mapped)
    ctx.path("align_meta.json").write_text(
        json.dumps({"coverage_dropped_segments": coverage_dropped}, sort_keys=True) + "\n"
    )
    return {"pairs": len(mapped), "coverage_dropped": coverage_dropped}


def stage_filter(ctx: RunContext) -> dict:
    gateway = ctx.gateway()
    tau = float(ctx.config.get("tau", 0.7))
    lines, _ = read_lines(ctx.path("mappings.jsonl"))
    pairs = [MappedPair.from_dict(row) for _, row in lines]
    failed = set(
        json.loads(ctx.path("segment_failures.json").read_text())["failed_reviews"]
    )
    meta = json.loads(ctx.path("align_meta.json").read_text())
    retained, report = apply_filters(
        pairs,
        tau,
        gateway,
        structurally_failed_reviews=failed,
        coverage_dropped_segments=meta["coverage_dropped_segments"],
    )
    write_all(ctx.path("filtered.jsonl"), (p.to_dict() for p in retained))
    ctx.path("filter_report.json").write_text(
        json.dumps(report.to_dict(), sort_keys=True) + "\n"
    )
    return {"retained": report.retained, **{f"dropped_{k}": v for k, v in report.dropped.items()}}


def stage_label(ctx: RunContext) -> dict:
    gateway = ctx.gateway()
    lines, _ = read_lines(ctx.path("filtered.jsonl"))
    pairs = [MappedPair.from_dict(row) for _, row in lines]
    labeled, dropped = label_pairs(pairs, gateway)
    write_all(ctx.path("labeled.jsonl"), (p.to_dict() for p in labeled))
    return {"labeled": len(labeled), "dropped_miscellaneous": dropped}


def _load_labeled(ctx: RunContext) -> list[MappedPair]:
    lines, _ = read_lines(ctx.path("labeled.jsonl"))
    return [MappedPair.from_dict(row) for _, row in lines]


def stage_build_sft(ctx: RunContext) -> dict:
    labeled = _load_labeled(ctx)
    manuscripts = {
        r.paper_id: r.manuscript
        for r in corpus_mod.load_corpus(ctx.path("corpus.jsonl"))[0]
    }
    seeds = ctx.config.get("seeds", {})
    examples = build_sft(
        labeled,
        manuscripts,
        per_perspective_quota=int(ctx.config.get("quota", 1900)),
        seed=int(seeds.get("pairs", 7)),
        context_char_budget=ctx.config.get("context_char_budget"),
    )
    train, test = split(
        examples, float(ctx.config.get("holdout", 0.1)), int(seeds.get("split", 7))
    )
    write_all(ctx.path("sft_train.jsonl"), (sft_to_chat(e) for e in train))
    write_all(ctx.path("sft_test.jsonl"), (sft_to_chat(e) for e in test))
    return {"sft_total": len(examples), "sft_train": len(train), "sft_test": len(test)}


def stage_build_pref(ctx: RunContext) -> dict:
    labeled = _load_labeled(ctx)
    seeds = ctx.config.get("seeds", {})
    triples = build_preferences(
        labeled,
        cap_per_segment=int(ctx.config.get("cap_per_segment", 3)),
        seed=int(seeds.get("pairs", 7)),
        strict_tiers=bool(ctx.config.get("strict_tiers", False)),
    )
    train, test = split(
        triples, float(ctx.config.get("holdout", 0.1)), int(seeds.get("split", 7))
    )
    write_all(ctx.path("pref_train.jsonl"), (preference_to_chat(t) for t in train))
    write_all(ctx.path("pref_test.jsonl"), (preference_to_chat(t) for t in test))
    tiers = {"large": 0, "medium": 0, "small": 0}
    for t in triples:
        tiers[t.tier] += 1
    return {
        "pref_total": len(triples),
        "pref_train": len(train),
        "pref_test": len(test),
        **{f"tier_{k}": v for k, v in tiers.items()},
    }


_STAGE_FN = {
    "ingest": stage_ingest,
    "segment": stage_segment,
    "align": stage_align,
    "filter": stage_filter,
    "label": stage_label,
    "build-sft": stage_build_sft,
    "build-pref": stage_build_pref,
}


def run(config: dict, stages: list[str] | None = None, force: bool = False) -> dict:
    """Execute stages in graph order, skipping up-to-date ones.

    A stage is skipped when the manifest records the same effective
    config hash and its outputs' digests still match.  Outputs modified
    outside the pipeline raise StaleInput unless force.
    """
    run_dir = Path(config["run_dir"])
    run_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(config=config, run_dir=run_dir)
    manifest_path = run_dir / "manifest.json"
    manifest = (
        json.loads(manifest_path.read_text()) if manifest_path.exists() else {"stages": {}}
    )
    manifest["config"] = config
    wanted = list(STAGE_ORDER) if not stages or stages == ["all"] else stages
    for stage in STAGE_ORDER:
        if stage not in wanted:
            continue
        h = effective_hash(config, stage)
        outputs = [ctx.path(name) for name in _OUTPUTS[stage]]
        entry = manifest["stages"].get(stage)
        if entry and entry["config_hash"] == h and all(p.exists() for p in outputs):
            digests = {p.name: file_digest(p) for p in outputs}
            if digests == entry["outputs"]:
                logger.info("skip %s (up to date)", stage)
                continue
            if not force:
                raise StaleInput(
                    f"outputs of {stage} were modified outside the pipeline; use --force"
                )
        try:
            counts = _STAGE_FN[stage](ctx)
        except Exception as exc:  # noqa: BLE001 - wrapped with stage name
            raise StageFailure(stage, exc) from exc
        manifest["stages"][stage] = {
            "config_hash": h,
            "outputs": {p.name: file_digest(p) for p in outputs if p.exists()},
            "counts": counts,
        }
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        logger.info("ran %s: %s", stage, counts)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def stage_counts(manifest: dict) -> dict:
    return {name: entry["counts"] for name, entry in manifest.get("stages", {}).items()}
