"""Human-annotation service: task dispensing, response store, aggregation.

Annotators receive tasks in a seeded-shuffled per-annotator order, never see
answer keys, and submit one final response per task. A resubmission must set
``replace``; it supersedes the stored response while the store keeps every
line as an audit trail. Accidental duplicate finals are rejected with 409.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence
from urllib.parse import parse_qs, urlparse

from .dataset import TIERS
from .runner import RunRecord, TaskEntry, aggregate_discriminative
from .tasks import TaskInstance, task_to_dict


@dataclass(frozen=True)
class AnnotationResponse:
    annotator_id: str
    task_id: str
    payload: dict
    wall_time_ms: float = 0.0
    submitted_at: str = ""
    replace: bool = False


class StoreUnavailableError(RuntimeError):
    pass


class ResponseStore:
    """Append-only JSONL response log with atomic line writes."""

    def __init__(self, path: "str | Path | None" = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._lines: list[dict] = []
        if self.path is not None and self.path.exists():
            with self.path.open("r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        self._lines.append(json.loads(line))

    def append(self, response: AnnotationResponse) -> None:
        doc = {
            "annotator_id": response.annotator_id,
            "task_id": response.task_id,
            "payload": response.payload,
            "wall_time_ms": response.wall_time_ms,
            "submitted_at": response.submitted_at,
            "replace": response.replace,
        }
        with self._lock:
            if self.path is not None:
                try:
                    with self.path.open("a", encoding="utf-8") as f:
                        f.write(json.dumps(doc, ensure_ascii=False) + "\n")
                        f.flush()
                except OSError as e:
                    raise StoreUnavailableError(str(e)) from e
            self._lines.append(doc)

    def audit_trail(self) -> list[dict]:
        with self._lock:
            return list(self._lines)

    def final_responses(self) -> dict[tuple[str, str], dict]:
        """Latest response per (annotator, task); later replacements win."""
        final: dict[tuple[str, str], dict] = {}
        for doc in self.audit_trail():
            final[(doc["annotator_id"], doc["task_id"])] = doc
        return final

    def has_final(self, annotator_id: str, task_id: str) -> bool:
        return (annotator_id, task_id) in self.final_responses()

    def flush(self) -> None:
        pass  # appends are flushed per line


def validate_payload(task: TaskInstance, payload: object) -> "str | None":
    """Return a validation error message, or None when the payload fits the kind."""
    if not isinstance(payload, dict):
        return "payload must be an object"
    labels = list(task.labels)
    if task.kind == "selection":
        label = payload.get("label")
        if label not in labels:
            return f"selection payload needs a label among {labels}"
    elif task.kind == "ranking":
        permutation = payload.get("permutation")
        if not isinstance(permutation, list) or len(permutation) != len(labels):
            return f"ranking payload needs a permutation of length {len(labels)}"
        if sorted(permutation) != sorted(labels):
            return "ranking payload must use every option label exactly once"
    elif task.kind == "classification":
        assignment = payload.get("assignment")
        if not isinstance(assignment, dict) or set(assignment) != set(labels):
            return "classification payload must assign every option exactly once"
        bad = [t for t in assignment.values() if t not in TIERS]
        if bad:
            return f"unknown tier(s): {bad}"
    elif task.kind == "preference":
        scores = payload.get("scores")
        if not isinstance(scores, dict) or set(scores) != set(labels):
            return "preference payload must score every option"
        bad_values = [v for v in scores.values() if not isinstance(v, int) or not 1 <= v <= 5]
        if bad_values:
            return "scores must be integers from 1 to 5"
    else:
        return f"unsupported task kind {task.kind}"
    return None


class AnnotationService:
    """Protocol logic, independent of the HTTP layer."""

    def __init__(self, tasks: Sequence[TaskInstance], store: ResponseStore, seed: int = 0):
        self.tasks = list(tasks)
        self.by_id = {t.task_id: t for t in self.tasks}
        self.store = store
        self.seed = seed
        self._lock = threading.Lock()

    def order_for(self, annotator_id: str) -> list[str]:
        ids = sorted(self.by_id)
        random.Random(f"{self.seed}:{annotator_id}").shuffle(ids)
        return ids

    def next_task(self, annotator_id: str) -> "TaskInstance | None":
        with self._lock:
            answered = {
                task_id
                for (a, task_id) in self.store.final_responses()
                if a == annotator_id
            }
            for task_id in self.order_for(annotator_id):
                if task_id not in answered:
                    return self.by_id[task_id]
        return None

    def submit(self, response: AnnotationResponse) -> tuple[int, dict]:
        task = self.by_id.get(response.task_id)
        if task is None:
            return 400, {"error": f"unknown task_id {response.task_id}"}
        if not response.annotator_id:
            return 400, {"error": "annotator_id is required"}
        message = validate_payload(task, response.payload)
        if message:
            return 400, {"error": message}
        with self._lock:
            if self.store.has_final(response.annotator_id, response.task_id) and not response.replace:
                return 409, {"error": "a final response for this task already exists"}
            try:
                self.store.append(response)
            except StoreUnavailableError as e:
                return 503, {"error": f"store unavailable: {e}", "retryable": True}
            completed = sum(
                1
                for (a, _) in self.store.final_responses()
                if a == response.annotator_id
            )
        return 200, {"ok": True, "completed": completed}

    def progress(self, annotator_id: str) -> dict:
        completed = sum(1 for (a, _) in self.store.final_responses() if a == annotator_id)
        return {"annotator": annotator_id, "completed": completed, "total": len(self.tasks)}

    def results(self) -> dict:
        record = merge_human_responses(self.store, self.tasks)
        return {"run_id": record.run_id, "aggregates": record.aggregates}

    def public_task(self, task: TaskInstance) -> dict:
        doc = task_to_dict(task, include_key=False)
        # comment ids (and preference source names) stay server-side; the
        # client only ever sees anonymized labels and texts
        doc["options"] = [[label, "", text] for label, _, text in doc["options"]]
        return doc


def merge_human_responses(store: ResponseStore, tasks: Sequence[TaskInstance]) -> RunRecord:
    """Pooled and per-annotator human aggregates via the model-run metrics."""
    final = store.final_responses()
    if not final:
        raise ValueError("annotation store has no responses")
    by_id = {t.task_id: t for t in tasks}

    def to_parsed(task: TaskInstance, payload: dict) -> object:
        if task.kind == "selection":
            return [payload["label"]]
        if task.kind == "ranking":
            return list(payload["permutation"])
        if task.kind == "classification":
            return dict(payload["assignment"])
        return dict(payload["scores"])

    entries_by_kind: dict[str, list[TaskEntry]] = {}
    entries_by_annotator: dict[str, dict[str, list[TaskEntry]]] = {}
    for (annotator, task_id), doc in sorted(final.items()):
        task = by_id.get(task_id)
        if task is None:
            continue
        entry = TaskEntry(task_id, "", to_parsed(task, doc["payload"]))
        entries_by_kind.setdefault(task.kind, []).append(entry)
        entries_by_annotator.setdefault(annotator, {}).setdefault(task.kind, []).append(entry)

    def kind_aggregates(kind_entries: dict[str, list[TaskEntry]]) -> dict:
        out = {}
        for kind, entries in sorted(kind_entries.items()):
            kind_tasks = [t for t in tasks if t.kind == kind]
            if kind == "preference":
                out[kind] = _preference_aggregates(kind_tasks, entries, by_id)
            else:
                out[kind] = aggregate_discriminative(kind_tasks, entries)
        return out

    aggregates = kind_aggregates(entries_by_kind)
    aggregates["per_annotator"] = {
        annotator: kind_aggregates(kinds) for annotator, kinds in sorted(entries_by_annotator.items())
    }
    all_entries = [e for es in entries_by_kind.values() for e in es]
    return RunRecord(
        run_id="human",
        kind="human",
        config={"model": "human", "task_ids": sorted({e.task_id for e in all_entries})},
        entries=all_entries,
        aggregates=aggregates,
        baseline=False,
    )


def _preference_aggregates(tasks, entries, by_id) -> dict:
    votes: dict[str, float] = {}
    score_sums: dict[str, list[float]] = {}
    for entry in entries:
        task = by_id[entry.task_id]
        sources = dict(task.answer_key)
        scores = dict(entry.parsed)
        top = max(scores.values())
        winners = [label for label, s in scores.items() if s == top]
        for label in winners:
            votes[sources[label]] = votes.get(sources[label], 0.0) + 1.0 / len(winners)
        for label, s in scores.items():
            score_sums.setdefault(sources[label], []).append(float(s))
    total_votes = sum(votes.values())
    return {
        "count": len(entries),
        "vote_share": {s: v / total_votes for s, v in sorted(votes.items())} if total_votes else {},
        "mean_score": {s: sum(v) / len(v) for s, v in sorted(score_sums.items())},
    }


# --- HTTP layer ------------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    service: AnnotationService = None  # set by server factory
    static_dir: "Path | None" = None

    def log_message(self, fmt, *args):  # quiet test output
        pass

    def _send_json(self, status: int, body: dict) -> None:
        data = json.dumps(body, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        url = urlparse(self.path)
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        if url.path == "/api/tasks/next":
            annotator = query.get("annotator", "")
            if not annotator:
                return self._send_json(400, {"error": "annotator query parameter is required"})
            task = self.service.next_task(annotator)
            if task is None:
                return self._send_json(200, {"done": True, "task": None})
            return self._send_json(200, {"done": False, "task": self.service.public_task(task)})
        if url.path == "/api/progress":
            annotator = query.get("annotator", "")
            if not annotator:
                return self._send_json(400, {"error": "annotator query parameter is required"})
            return self._send_json(200, self.service.progress(annotator))
        if url.path == "/api/results":
            try:
                return self._send_json(200, self.service.results())
            except ValueError as e:
                return self._send_json(200, {"aggregates": {}, "note": str(e)})
        if self.static_dir is not None:
            return self._serve_static(url.path)
        return self._send_json(404, {"error": "not found"})

    def _serve_static(self, path: str) -> None:
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            return self._send_json(404, {"error": "not found"})
        content_types = {
            ".html": "text/html",
            ".js": "text/javascript",
            ".css": "text/css",
            ".json": "application/json",
        }
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_types.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/api/responses":
            return self._send_json(404, {"error": "not found"})
        try:
            length = int(self.headers.get("Content-Length", "0"))
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            return self._send_json(400, {"error": "body must be JSON"})
        response = AnnotationResponse(
            annotator_id=str(doc.get("annotator_id", "")),
            task_id=str(doc.get("task_id", "")),
            payload=doc.get("payload") if isinstance(doc.get("payload"), dict) else {},
            wall_time_ms=float(doc.get("wall_time_ms", 0.0)),
            submitted_at=time.strftime("%Y-%m-%dT%H:%M:%S"),
            replace=bool(doc.get("replace", False)),
        )
        status, body = self.service.submit(response)
        return self._send_json(status, body)


class AnnotationServer:
    """Threaded HTTP server wrapper with graceful shutdown."""

    def __init__(
        self,
        bind_address: tuple[str, int],
        tasks: Sequence[TaskInstance],
        store: ResponseStore,
        seed: int = 0,
        static_dir: "str | Path | None" = None,
    ):
        self.service = AnnotationService(tasks, store, seed=seed)
        handler = type(
            "BoundHandler",
            (_Handler,),
            {
                "service": self.service,
                "static_dir": Path(static_dir) if static_dir else None,
            },
        )
        self.httpd = ThreadingHTTPServer(bind_address, handler)
        self._thread: "threading.Thread | None" = None

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def shutdown(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        self.service.store.flush()
        if self._thread is not None:
            self._thread.join(timeout=5)


def serve_annotation(
    bind_address: tuple[str, int],
    task_manifest: Sequence[TaskInstance],
    store: ResponseStore,
    seed: int = 0,
    static_dir: "str | Path | None" = None,
) -> AnnotationServer:
    """Create and start the annotation service; caller owns shutdown."""
    server = AnnotationServer(bind_address, task_manifest, store, seed=seed, static_dir=static_dir)
    server.start()
    return server
