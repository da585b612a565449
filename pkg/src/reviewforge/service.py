"""HTTP service backing the human annotation workflows.

State lives in one append-only JSONL log replayed on start: task and
annotator definitions, assignments, and submitted records.  Candidate
model identities stay server-side; every payload leaving the API is
anonymized, and export restores identities after the fact.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .filters import cohens_kappa
from .jsonl import Appender, read_lines

TASK_KINDS = ("mapping_verification", "pointwise_rating", "pairwise_preference")
SCORE_DIMENSIONS = ("actionability", "specificity", "groundedness", "relevance", "helpfulness")
DEFAULT_COVERAGE = 3

RUBRIC_ANCHORS = {1: "Very poor", 2: "Poor", 3: "Fair", 4: "Good", 5: "Excellent"}


@dataclass
class Task:
    task_id: str
    kind: str
    payload: dict  # public part, no model names
    secret: dict = field(default_factory=dict)  # slot -> model identity
    display_order_seed: int = 0


class SubmitBody(BaseModel):
    task_id: str
    annotator_id: str
    result: dict


def _validate_result(kind: str, result: dict) -> None:
    if kind == "pairwise_preference":
        if result.get("preference") not in ("A", "B", "Tie"):
            raise HTTPException(422, "preference must be A, B or Tie")
    elif kind == "pointwise_rating":
        scores = result.get("scores")
        if not isinstance(scores, dict) or set(scores) != set(SCORE_DIMENSIONS):
            raise HTTPException(422, f"scores must cover {SCORE_DIMENSIONS}")
        for dim, value in scores.items():
            if not isinstance(value, int) or not 1 <= value <= 5:
                raise HTTPException(422, f"{dim} score {value!r} outside 1..5")
    elif kind == "mapping_verification":
        if result.get("no_response"):
            return
        span = result.get("gold_span_range")
        if (
            not isinstance(span, list)
            or len(span) != 2
            or not all(isinstance(v, int) for v in span)
            or not span[0] < span[1]
        ):
            raise HTTPException(422, "gold_span_range must be [start, end) with start < end")
    else:
        raise HTTPException(422, f"unknown task kind {kind}")


class SessionStore:
    """Annotation session state with append-only persistence."""

    def __init__(self, log_path: str | Path, coverage: int = DEFAULT_COVERAGE):
        self.log_path = Path(log_path)
        self.coverage = coverage
        self.tasks: dict[str, Task] = {}
        self.annotators: list[str] = []
        # task_id -> set of annotators who received it
        self.assigned: dict[str, set[str]] = {}
        # (task_id, annotator_id) -> result
        self.records: dict[tuple[str, str], dict] = {}
        self._lock = threading.Lock()
        self._replaying = False
        if self.log_path.exists():
            self._replay()
        self._appender = Appender(self.log_path)

    def _replay(self) -> None:
        self._replaying = True
        lines, _ = read_lines(self.log_path)
        for _, event in lines:
            kind = event.pop("event")
            if kind == "task":
                self._apply_task(event)
            elif kind == "annotator":
                self.annotators.append(event["annotator_id"])
            elif kind == "coverage":
                self.coverage = event["coverage"]
            elif kind == "assignment":
                self.assigned.setdefault(event["task_id"], set()).add(event["annotator_id"])
            elif kind == "record":
                self.records[(event["task_id"], event["annotator_id"])] = event["result"]
        self._replaying = False

    def _log(self, event: dict) -> None:
        if not self._replaying:
            self._appender.append(event)

    def _apply_task(self, data: dict) -> None:
        task = Task(
            task_id=data["task_id"],
            kind=data["kind"],
            payload=data["payload"],
            secret=data.get("secret", {}),
            display_order_seed=data.get("display_order_seed", 0),
        )
        self.tasks[task.task_id] = task
        self.assigned.setdefault(task.task_id, set())

    def add_annotator(self, annotator_id: str) -> None:
        with self._lock:
            if annotator_id not in self.annotators:
                self.annotators.append(annotator_id)
                self._log({"event": "annotator", "annotator_id": annotator_id})

    def add_task(self, task: Task) -> None:
        with self._lock:
            self._apply_task(
                {
                    "task_id": task.task_id,
                    "kind": task.kind,
                    "payload": task.payload,
                    "secret": task.secret,
                    "display_order_seed": task.display_order_seed,
                }
            )
            self._log(
                {
                    "event": "task",
                    "task_id": task.task_id,
                    "kind": task.kind,
                    "payload": task.payload,
                    "secret": task.secret,
                    "display_order_seed": task.display_order_seed,
                }
            )

    def next_task(self, annotator_id: str) -> dict | None:
        """Least-covered task this annotator has not seen, atomically assigned."""
        if annotator_id not in self.annotators:
            raise HTTPException(403, f"unknown annotator {annotator_id!r}")
        with self._lock:
            open_tasks = [
                t
                for t in self.tasks.values()
                if annotator_id not in self.assigned[t.task_id]
                and len(self.assigned[t.task_id]) < self.coverage
            ]
            if not open_tasks:
                return None
            open_tasks.sort(key=lambda t: (len(self.assigned[t.task_id]), t.task_id))
            task = open_tasks[0]
            self.assigned[task.task_id].add(annotator_id)
            self._log(
                {"event": "assignment", "task_id": task.task_id, "annotator_id": annotator_id}
            )
        return self._public_view(task)

    def _public_view(self, task: Task) -> dict:
        payload = dict(task.payload)
        candidates = payload.get("candidates")
        if candidates:
            rng = random.Random(task.display_order_seed)
            order = list(range(len(candidates)))
            rng.shuffle(order)
            payload["candidates"] = [
                {"slot": chr(ord("A") + i), "text": candidates[j]["text"]}
                for i, j in enumerate(order)
            ]
        return {
            "task_id": task.task_id,
            "kind": task.kind,
            "payload": payload,
            "display_order_seed": task.display_order_seed,
            "rubric_anchors": RUBRIC_ANCHORS if task.kind == "pointwise_rating" else None,
        }

    def slot_to_model(self, task: Task) -> dict[str, str]:
        """Displayed slot letter -> model identity (server-side only)."""
        candidates = task.payload.get("candidates", [])
        rng = random.Random(task.display_order_seed)
        order = list(range(len(candidates)))
        rng.shuffle(order)
        out = {}
        for i, j in enumerate(order):
            slot = chr(ord("A") + i)
            out[slot] = task.secret.get(candidates[j].get("model_key", str(j)), "")
        return out

    def submit(self, body: SubmitBody) -> dict:
        task = self.tasks.get(body.task_id)
        if task is None:
            raise HTTPException(404, f"unknown task {body.task_id!r}")
        with self._lock:
            if body.annotator_id not in self.assigned.get(body.task_id, set()):
                raise HTTPException(409, "task not assigned to this annotator")
            _validate_result(task.kind, body.result)
            key = (body.task_id, body.annotator_id)
            if key in self.records:
                if self.records[key] == body.result:
                    return {"status": "ok", "duplicate": True}
                raise HTTPException(409, "conflicting resubmission")
            self.records[key] = body.result
            self._log(
                {
                    "event": "record",
                    "task_id": body.task_id,
                    "annotator_id": body.annotator_id,
                    "result": body.result,
                }
            )
        return {"status": "ok", "duplicate": False}

    def progress(self) -> dict:
        total_slots = len(self.tasks) * self.coverage
        return {
            "tasks": len(self.tasks),
            "annotators": len(self.annotators),
            "coverage_target": self.coverage,
            "assigned": sum(len(v) for v in self.assigned.values()),
            "submitted": len(self.records),
            "total_slots": total_slots,
        }

    def export(self) -> dict:
        """Averaged scores per item, per-annotator label matrices, kappa."""
        pointwise: dict[str, dict] = {}
        pairwise: dict[str, dict] = {}
        mapping: dict[str, dict] = {}
        for (task_id, annotator_id), result in sorted(self.records.items()):
            task = self.tasks[task_id]
            if task.kind == "pointwise_rating":
                entry = pointwise.setdefault(
                    task_id,
                    {
                        "model": task.secret.get("model", ""),
                        "paper_id": task.payload.get("paper_id", ""),
                        "by_annotator": {},
                    },
                )
                entry["by_annotator"][annotator_id] = result["scores"]
            elif task.kind == "pairwise_preference":
                slot_map = self.slot_to_model(task)
                pref = result["preference"]
                entry = pairwise.setdefault(
                    task_id,
                    {"paper_id": task.payload.get("paper_id", ""), "by_annotator": {}},
                )
                entry["by_annotator"][annotator_id] = (
                    "Tie" if pref == "Tie" else slot_map.get(pref, pref)
                )
            else:
                entry = mapping.setdefault(
                    task_id,
                    {"segment_id": task.payload.get("segment_id", ""), "by_annotator": {}},
                )
                entry["by_annotator"][annotator_id] = (
                    None if result.get("no_response") else result["gold_span_range"]
                )
        for entry in pointwise.values():
            raters = entry["by_annotator"]
            entry["mean_scores"] = {
                dim: sum(r[dim] for r in raters.values()) / len(raters)
                for dim in SCORE_DIMENSIONS
            }
        kappas = self._pairwise_kappas(pairwise)
        return {
            "pointwise": pointwise,
            "pairwise": pairwise,
            "mapping": mapping,
            "pairwise_kappa": kappas,
        }

    def _pairwise_kappas(self, pairwise: dict) -> dict:
        """Kappa per annotator pair over shared pairwise tasks."""
        by_annotator: dict[str, dict[str, str]] = {}
        for task_id, entry in pairwise.items():
            for annotator, label in entry["by_annotator"].items():
                by_annotator.setdefault(annotator, {})[task_id] = label
        out = {}
        annotators = sorted(by_annotator)
        for i, a in enumerate(annotators):
            for b in annotators[i + 1 :]:
                shared = sorted(set(by_annotator[a]) & set(by_annotator[b]))
                if not shared:
                    continue
                out[f"{a}|{b}"] = cohens_kappa(
                    [str(by_annotator[a][t]) for t in shared],
                    [str(by_annotator[b][t]) for t in shared],
                )
        return out


_FALLBACK_PAGE = """<!doctype html>
<html><head><title>annotation</title></head>
<body><p>Annotation UI assets not built; the JSON API is live under /api/.</p></body></html>
"""


def create_app(store: SessionStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="annotation-service")

    @app.get("/api/tasks/next")
    def next_task(annotator: str):
        task = store.next_task(annotator)
        if task is None:
            return {"status": "no_tasks"}
        return {"status": "ok", "task": task}

    @app.post("/api/records")
    def submit(body: SubmitBody):
        return store.submit(body)

    @app.get("/api/progress")
    def progress():
        return store.progress()

    @app.get("/api/export")
    def export():
        return store.export()

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_PAGE

    return app
