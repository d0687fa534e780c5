"""Run orchestration: model runs over task sets, heuristic baselines,
aggregation, persistence, and replay.

Model free-text answers are parsed with a strict-then-lenient cascade;
unparseable answers are scored incorrect and flagged, never guessed.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace
from typing import Iterable, Sequence

from . import metrics
from .gateway import Gateway, RetryExhaustedError, frame_plan, make_request
from .judge import extract_entities
from .prompts import PromptPack
from .ripple.pipeline import RipplePipeline
from .tasks import TaskInstance

DISCRIMINATIVE_KINDS = ("selection", "ranking", "classification")
GENERATIVE_KINDS = ("explanation", "creation")


class RunConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    model_id: str
    temperature_discriminative: float = 0.0
    temperature_generative: float = 0.8
    max_tokens: int = 1024
    frame_policy: str = "dynamic"

    @classmethod
    def from_endpoint(cls, endpoint) -> "ModelConfig":
        return cls(
            model_id=endpoint.model_id,
            temperature_discriminative=endpoint.temperature_discriminative,
            temperature_generative=endpoint.temperature_generative,
            max_tokens=endpoint.max_tokens,
        )


@dataclass
class TaskEntry:
    task_id: str
    raw_text: str
    parsed: object
    latency_ms: float = 0.0
    flags: tuple[str, ...] = ()


@dataclass
class RunRecord:
    run_id: str
    kind: str
    config: dict
    entries: list[TaskEntry] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    baseline: bool = False


# --- answer parsing -----------------------------------------------------------


def _label_sequence(text: str, labels: Sequence[str]) -> list[str]:
    """Standalone option letters in order of first appearance."""
    pattern = re.compile(rf"(?<![A-Za-z])([{''.join(labels)}])(?![A-Za-z])")
    seen: list[str] = []
    for m in pattern.finditer(text):
        if m.group(1) not in seen:
            seen.append(m.group(1))
    return seen


def parse_selection_answer(text: str, labels: Sequence[str]) -> "list[str] | None":
    stripped = text.strip()
    if stripped in labels:
        return [stripped]
    found = _label_sequence(text, labels)
    return found or None


def parse_ranking_answer(text: str, labels: Sequence[str]) -> "list[str] | None":
    found = _label_sequence(text, labels)
    if len(found) == len(labels):
        return found
    return None


_TIER_LINE_RE = re.compile(
    r"(?<![A-Za-z])([A-Z])\s*[:\-–=>.]*\s*(god|high|ordinary)", re.IGNORECASE
)


def parse_classification_answer(text: str, labels: Sequence[str]) -> "dict[str, str] | None":
    assignment: dict[str, str] = {}
    for m in _TIER_LINE_RE.finditer(text):
        label, tier = m.group(1), m.group(2).lower()
        if label in labels and label not in assignment:
            assignment[label] = tier
    if set(assignment) == set(labels):
        return assignment
    return None


def parse_explanation_answer(text: str, known_tags: Sequence[str]) -> dict:
    """Tags line plus free-form explanation; tags matched case-insensitively."""
    tags: list[str] = []
    explanation_lines: list[str] = []
    by_fold = {t.casefold(): t for t in known_tags}
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.lower().startswith("tags:"):
            for piece in stripped[5:].split(","):
                tag = by_fold.get(piece.strip().casefold())
                if tag and tag not in tags:
                    tags.append(tag)
        elif stripped.lower().startswith("explanation:"):
            explanation_lines.append(stripped[len("explanation:") :].strip())
        elif explanation_lines:
            explanation_lines.append(stripped)
    if not tags:
        # lenient: any known tag mentioned anywhere
        folded = text.casefold()
        for t in known_tags:
            if t.casefold() in folded and t not in tags:
                tags.append(t)
    explanation = "\n".join(explanation_lines).strip() or text.strip()
    return {"tags": sorted(tags), "explanation": explanation}


# --- prompt assembly -----------------------------------------------------------


def _options_block(task: TaskInstance) -> str:
    return "\n".join(f"{o.label}. {o.text}" for o in task.options)


def _selection_instruction(task: TaskInstance) -> str:
    if len(task.options) == 3:
        return (
            "Answer with the letter of the best option followed by the letter of "
            'the second-best option, separated by " > " (for example: B > A).'
        )
    return "Answer with the single letter of the best option."


def _task_images(task: TaskInstance, frame_policy: str) -> tuple[str, ...]:
    frames = task.video.frame_paths
    if not frames:
        return ()
    plan = frame_plan(task.video.duration_s, len(frames), policy=frame_policy)
    return tuple(frames[i] for i in plan.selected_indices)


def build_discriminative_request(
    task: TaskInstance, model_cfg: ModelConfig, prompts: PromptPack
) -> "object":
    template = {
        "selection": "task_selection",
        "ranking": "task_ranking",
        "classification": "task_classification",
    }[task.kind]
    values = {"video_context": task.video.surrogate_text(), "options": ""}
    if task.kind == "selection":
        values["instruction"] = _selection_instruction(task)
    if task.kind == "classification":
        tiers = [t for t in (task.answer_key or {}).values()]
        values["god_count"] = "1"
        values["high_count"] = str(tiers.count("high") if tiers else len(task.options) - 6)
        values["ordinary_count"] = str(tiers.count("ordinary") if tiers else 5)
    prompt = prompts.render(template, **values)
    return make_request(
        model_cfg.model_id,
        prompt,
        images=_task_images(task, model_cfg.frame_policy),
        comments_block=_options_block(task),
        temperature=model_cfg.temperature_discriminative,
        max_tokens=model_cfg.max_tokens,
        metadata={"phase": "task", "kind": task.kind, "task_id": task.task_id},
    )


def _examples_block(task: TaskInstance) -> str:
    if not task.fewshot_examples:
        return ""
    lines = ["", "Top comments from similar videos, for reference:"]
    lines.extend(f"{i + 1}. {e.text}" for i, e in enumerate(task.fewshot_examples))
    return "\n".join(lines)


def build_generative_request(
    task: TaskInstance, mode: str, model_cfg: ModelConfig, prompts: PromptPack, taxonomy=None
):
    if task.kind == "explanation":
        from .taxonomy import default_taxonomy

        tax = taxonomy or default_taxonomy()
        names = [s for subs in tax.dimensions.values() for s in subs]
        prompt = prompts.render(
            "task_explanation",
            video_context=task.video.surrogate_text(),
            comment=task.comment_text,
            taxonomy=", ".join(names),
        )
    else:
        prompt = prompts.render(
            "task_creation",
            video_context=task.video.surrogate_text(),
            examples_block=_examples_block(task) if mode == "five_shot" else "",
        )
    return make_request(
        model_cfg.model_id,
        prompt,
        images=_task_images(task, model_cfg.frame_policy),
        temperature=model_cfg.temperature_generative,
        max_tokens=model_cfg.max_tokens,
        metadata={"phase": "task", "kind": task.kind, "task_id": task.task_id},
    )


# --- aggregation -----------------------------------------------------------------


def _slice_ids(tasks: Sequence[TaskInstance]) -> dict[str, set]:
    slices: dict[str, set] = {}
    for t in tasks:
        for dim in t.art_dimensions:
            slices.setdefault(dim, set()).add(t.task_id)
    return slices


def aggregate_discriminative(tasks: Sequence[TaskInstance], entries: Sequence[TaskEntry]) -> dict:
    by_id = {t.task_id: t for t in tasks}
    kind = tasks[0].kind

    def stats(selected_ids: "set | None" = None) -> dict:
        chosen = [e for e in entries if selected_ids is None or e.task_id in selected_ids]
        if not chosen:
            return {"count": 0}
        out: dict = {"count": len(chosen)}
        unparseable = sum(1 for e in chosen if e.parsed is None)
        out["unparseable"] = unparseable
        if kind == "selection":
            hits = top2_hits = top2_eligible = 0
            for e in chosen:
                key = by_id[e.task_id].answer_key
                ranked = e.parsed or []
                if ranked and ranked[0] == key:
                    hits += 1
                if len(by_id[e.task_id].options) == 3:
                    top2_eligible += 1
                    if key in ranked[:2]:
                        top2_hits += 1
            out["accuracy"] = hits / len(chosen)
            if top2_eligible:
                out["top2_accuracy"] = top2_hits / top2_eligible
        elif kind == "ranking":
            ndcg_sum = ema_hits = 0.0
            for e in chosen:
                task = by_id[e.task_id]
                reference = list(task.answer_key)
                if e.parsed is not None:
                    rel = metrics.RelevanceVector.from_reference(reference)
                    ndcg_sum += metrics.ndcg(list(e.parsed), rel)
                    if list(e.parsed) == reference:
                        ema_hits += 1
            out["ndcg"] = ndcg_sum / len(chosen)
            out["ema"] = ema_hits / len(chosen)
        elif kind == "classification":
            option_acc_sum = ema_hits = 0.0
            for e in chosen:
                key = dict(by_id[e.task_id].answer_key)
                if e.parsed is not None:
                    assignment = dict(e.parsed)
                    correct = sum(1 for label, tier in key.items() if assignment.get(label) == tier)
                    option_acc_sum += correct / len(key)
                    if assignment == key:
                        ema_hits += 1
            out["accuracy"] = option_acc_sum / len(chosen)
            out["ema"] = ema_hits / len(chosen)
        return out

    aggregates = stats()
    aggregates["by_dimension"] = {
        dim: stats(ids) for dim, ids in sorted(_slice_ids(tasks).items())
    }
    return aggregates


def aggregate_generative(
    tasks: Sequence[TaskInstance],
    entries: Sequence[TaskEntry],
    entity_gateway: "Gateway | None" = None,
    judge_scores: "dict[str, object] | None" = None,
    embedder=None,
) -> dict:
    by_id = {t.task_id: t for t in tasks}
    kind = tasks[0].kind
    out: dict = {"count": len(entries)}
    if kind == "explanation":
        hits = 0
        rouge_sum = rouge_n = 0
        for e in entries:
            key = by_id[e.task_id].answer_key
            parsed = e.parsed or {}
            if sorted(parsed.get("tags", [])) == sorted(key["tags"]):
                hits += 1
            if parsed.get("explanation") and key["explanation"]:
                rouge_sum += metrics.rouge_l(parsed["explanation"], key["explanation"])
                rouge_n += 1
        out["tag_accuracy"] = hits / len(entries) if entries else 0.0
        if rouge_n:
            out["rouge_l"] = 100.0 * rouge_sum / rouge_n
    else:
        generations = []
        references = []
        for e in entries:
            text = (e.parsed or {}).get("text", "") if isinstance(e.parsed, dict) else ""
            generations.append(text)
            references.append(by_id[e.task_id].answer_key["reference"])
        scorable = [(g, r) for g, r in zip(generations, references) if g and r]
        if scorable:
            out["bleu_1"] = 100.0 * sum(metrics.bleu_n(g, [r], 1) for g, r in scorable) / len(scorable)
            out["bleu_2"] = 100.0 * sum(metrics.bleu_n(g, [r], 2) for g, r in scorable) / len(scorable)
            out["dist_1"] = 100.0 * metrics.dist_1([g for g, _ in scorable])
            out["rouge_l"] = 100.0 * sum(metrics.rouge_l(g, r) for g, r in scorable) / len(scorable)
            ref_sets = [extract_entities(r, entity_gateway).entities for _, r in scorable]
            gen_sets = [extract_entities(g, entity_gateway).entities for g, _ in scorable]
            weights = metrics.entity_weights(ref_sets)
            out["weo"] = metrics.corpus_weo(list(zip(gen_sets, ref_sets)), weights)
            if embedder is None:
                out["embedding_f1"] = None  # no embedding endpoint: unavailable
            else:
                out["embedding_f1"] = 100.0 * sum(
                    metrics.embedding_f1(g, r, embedder) for g, r in scorable
                ) / len(scorable)
    if judge_scores:
        judged = [judge_scores[e.task_id] for e in entries if e.task_id in judge_scores]
        if judged:
            out["judge_composite_raw"] = sum(s.composite_raw for s in judged) / len(judged)
            out["judge_composite_norm"] = sum(s.composite_norm for s in judged) / len(judged)
    else:
        out["judge_composite_raw"] = None
        out["judge_composite_norm"] = None
    out["by_dimension"] = {}
    return out


# --- model runs ---------------------------------------------------------------------


def _require_one_kind(tasks: Sequence[TaskInstance], allowed: tuple) -> str:
    kinds = {t.kind for t in tasks}
    if len(kinds) != 1:
        raise RunConfigError(f"tasks must share one kind, got {sorted(kinds)}")
    kind = kinds.pop()
    if kind not in allowed:
        raise RunConfigError(f"kind {kind} not allowed here (expected one of {allowed})")
    return kind


def _derive_run_id(parts: Iterable[str]) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:12]


def _base_config(tasks, model_cfg: ModelConfig, prompts: PromptPack, extra: dict) -> dict:
    config = {
        "model": model_cfg.model_id,
        "task_ids": [t.task_id for t in tasks],
        "prompt_pack_hash": prompts.content_hash(),
        "frame_policy": model_cfg.frame_policy,
    }
    config.update(extra)
    return config


class RunAborted(RuntimeError):
    """Gateway gave out mid-run; carries the partial record for persistence."""

    def __init__(self, partial: RunRecord, cause: Exception):
        super().__init__(f"run aborted after {len(partial.entries)} tasks: {cause}")
        self.partial = partial
        self.cause = cause


def run_discriminative(
    tasks: Sequence[TaskInstance],
    model_cfg: ModelConfig,
    gateway: Gateway,
    prompt_pack: "PromptPack | None" = None,
    max_workers: int = 1,
    resume: "RunRecord | None" = None,
) -> RunRecord:
    """One gateway call per task; answers parsed by label-extraction rules.

    ``resume`` skips task_ids already present in a partial record. On gateway
    exhaustion the partial progress is raised inside RunAborted.
    """
    kind = _require_one_kind(tasks, DISCRIMINATIVE_KINDS)
    prompts = prompt_pack or PromptPack()
    done: dict[str, TaskEntry] = {}
    if resume is not None:
        done = {e.task_id: e for e in resume.entries}

    def ask(task: TaskInstance) -> TaskEntry:
        request = build_discriminative_request(task, model_cfg, prompts)
        response = gateway.complete(request)
        labels = task.labels
        if kind == "selection":
            parsed = parse_selection_answer(response.text, labels)
        elif kind == "ranking":
            parsed = parse_ranking_answer(response.text, labels)
        else:
            parsed = parse_classification_answer(response.text, labels)
        flags = ("unparseable",) if parsed is None else ()
        return TaskEntry(task.task_id, response.text, parsed, response.latency_ms, flags)

    config = _base_config(tasks, model_cfg, prompts, {"mode": "discriminative", "kind": kind})
    run_id = _derive_run_id([json.dumps(config, sort_keys=True)])
    pending = [t for t in tasks if t.task_id not in done]
    entries_by_id: dict[str, TaskEntry] = dict(done)
    failure: "Exception | None" = None
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {pool.submit(ask, t): t for t in pending}
            for future, task in futures.items():
                try:
                    entries_by_id[task.task_id] = future.result()
                except RetryExhaustedError as e:
                    failure = failure or e
    else:
        for task in pending:
            try:
                entries_by_id[task.task_id] = ask(task)
            except RetryExhaustedError as e:
                failure = e
                break

    entries = [entries_by_id[t.task_id] for t in tasks if t.task_id in entries_by_id]
    if failure is not None:
        partial = RunRecord(run_id=run_id, kind=kind, config=config, entries=entries)
        raise RunAborted(partial, failure)
    return RunRecord(
        run_id=run_id,
        kind=kind,
        config=config,
        entries=entries,
        aggregates=aggregate_discriminative(tasks, entries),
    )


def _rot_video(task: TaskInstance) -> SimpleNamespace:
    v = task.video
    return SimpleNamespace(
        video_id=task.video_id,
        title=v.title,
        ocr_text=v.ocr_text,
        subtitle_text=v.subtitle_text,
        frame_paths=v.frame_paths,
        duration_s=v.duration_s,
    )


def run_generative(
    tasks: Sequence[TaskInstance],
    mode: str,
    model_cfg: ModelConfig,
    gateway: Gateway,
    prompt_pack: "PromptPack | None" = None,
    rot_params: "dict | None" = None,
    judge_gateway: "Gateway | None" = None,
    entity_gateway: "Gateway | None" = None,
    embedder=None,
    save_traces_to: "Path | None" = None,
) -> RunRecord:
    """Generation runs in plain, five_shot, or rot mode, scored against the
    hidden god reference."""
    if mode not in ("plain", "five_shot", "rot"):
        raise RunConfigError(f"unknown generative mode {mode!r}")
    kind = _require_one_kind(tasks, GENERATIVE_KINDS)
    prompts = prompt_pack or PromptPack()
    if mode == "five_shot":
        missing = [t.task_id for t in tasks if not t.fewshot_examples]
        if missing:
            raise RunConfigError(f"five_shot tasks missing exemplars: {missing[:5]}")
    if mode == "rot" and kind != "creation":
        raise RunConfigError("rot mode applies to creation tasks")

    from .taxonomy import default_taxonomy

    tax = default_taxonomy()
    entries: list[TaskEntry] = []
    for task in tasks:
        if mode == "rot":
            params = dict(rot_params or {})
            k = params.pop("k", 2)
            m = params.pop("m", None)
            pipeline = RipplePipeline(
                gateway,
                prompt_pack=prompts,
                retries=params.pop("retries", 1),
                model_id=model_cfg.model_id,
                **params,
            )
            trace = pipeline.run(_rot_video(task), k=k, m=m)
            trace_ref = ""
            if save_traces_to is not None:
                save_traces_to.mkdir(parents=True, exist_ok=True)
                trace_path = save_traces_to / f"{task.task_id}.trace.json"
                trace_path.write_text(
                    json.dumps(trace_to_dict(trace), ensure_ascii=False, indent=2), "utf-8"
                )
                trace_ref = str(trace_path)
            entries.append(
                TaskEntry(
                    task.task_id,
                    raw_text=trace.final_text,
                    parsed={"text": trace.final_text, "trace": trace_ref},
                    flags=tuple(trace.flags),
                )
            )
            continue
        request = build_generative_request(task, mode, model_cfg, prompts, taxonomy=tax)
        response = gateway.complete(request)
        if kind == "explanation":
            names = [s for subs in tax.dimensions.values() for s in subs]
            parsed: object = parse_explanation_answer(response.text, names)
        else:
            parsed = {"text": response.text.strip()}
        entries.append(TaskEntry(task.task_id, response.text, parsed, response.latency_ms))

    judge_scores = None
    if judge_gateway is not None:
        from .judge import judge_creation, judge_explanation

        judge_scores = {}
        for task, entry in zip(tasks, entries):
            if kind == "explanation":
                parsed = entry.parsed or {}
                judge_scores[task.task_id] = judge_explanation(
                    parsed.get("tags", []),
                    parsed.get("explanation", ""),
                    task.answer_key["tags"],
                    task.answer_key["explanation"],
                    judge_gateway,
                    prompt_pack=prompts,
                )
            else:
                judge_scores[task.task_id] = judge_creation(
                    (entry.parsed or {}).get("text", ""),
                    task.answer_key["reference"],
                    judge_gateway,
                    prompt_pack=prompts,
                )
        # judged runs persist both the raw judge text and the parsed scores
        for entry in entries:
            scored = judge_scores.get(entry.task_id)
            if scored is not None and isinstance(entry.parsed, dict):
                entry.parsed["judge"] = scored.to_dict()

    config = _base_config(tasks, model_cfg, prompts, {"mode": mode, "kind": kind})
    if mode == "rot":
        config["rot_params"] = {k: v for k, v in (rot_params or {}).items() if k != "pipeline"}
    return RunRecord(
        run_id=_derive_run_id([json.dumps(config, sort_keys=True)]),
        kind=kind,
        config=config,
        entries=entries,
        aggregates=aggregate_generative(tasks, entries, entity_gateway, judge_scores, embedder),
    )


# --- heuristic baselines ---------------------------------------------------------------


def baseline_random(tasks: Sequence[TaskInstance], trials: int = 5, seed: int = 0) -> RunRecord:
    """Uniform random answers, averaged over trials. Gateway-free."""
    kind = _require_one_kind(tasks, DISCRIMINATIVE_KINDS)
    trial_aggregates = []
    last_entries: list[TaskEntry] = []
    for trial in range(trials):
        rng = random.Random(seed * 7919 + trial)
        entries = []
        for task in tasks:
            labels = list(task.labels)
            if kind == "selection":
                parsed: object = rng.sample(labels, min(2, len(labels)))
            elif kind == "ranking":
                order = labels[:]
                rng.shuffle(order)
                parsed = order
            else:
                tiers = [task.answer_key[label] for label in labels]
                rng.shuffle(tiers)
                parsed = dict(zip(labels, tiers))
            entries.append(TaskEntry(task.task_id, "", parsed))
        trial_aggregates.append(aggregate_discriminative(tasks, entries))
        last_entries = entries

    def averaged(dicts: list[dict]) -> dict:
        out: dict = {}
        for key in ("accuracy", "top2_accuracy", "ndcg", "ema"):
            values = [d.get(key) for d in dicts]
            if all(v is not None for v in values):
                out[key] = sum(values) / len(values)
        for key in ("count", "unparseable"):
            if dicts and key in dicts[0]:
                out[key] = dicts[0][key]
        return out

    aggregates = averaged(trial_aggregates)
    aggregates["trials"] = trial_aggregates
    dims = trial_aggregates[0].get("by_dimension", {}) if trial_aggregates else {}
    aggregates["by_dimension"] = {
        dim: averaged([t["by_dimension"][dim] for t in trial_aggregates]) for dim in dims
    }
    config = {
        "model": "baseline:random",
        "task_ids": [t.task_id for t in tasks],
        "trials": trials,
        "seed": seed,
        "kind": kind,
        "mode": "baseline",
    }
    return RunRecord(
        run_id=_derive_run_id([json.dumps(config, sort_keys=True)]),
        kind=kind,
        config=config,
        entries=last_entries,
        aggregates=aggregates,
        baseline=True,
    )


def baseline_frequent(tasks: Sequence[TaskInstance]) -> RunRecord:
    """Predict the modal answer key of the task set everywhere. Gateway-free."""
    kind = _require_one_kind(tasks, DISCRIMINATIVE_KINDS)
    from collections import Counter

    if kind == "selection":
        counts = Counter(t.answer_key for t in tasks)
        modal = min(counts, key=lambda k: (-counts[k], k))
        predict = lambda task: [modal]
    elif kind == "ranking":
        counts = Counter(tuple(t.answer_key) for t in tasks)
        modal = min(counts, key=lambda k: (-counts[k], k))
        predict = lambda task: list(modal)
    else:
        counts = Counter(tuple(t.answer_key[label] for label in t.labels) for t in tasks)
        modal = min(counts, key=lambda k: (-counts[k], k))
        predict = lambda task: dict(zip(task.labels, modal))

    entries = [TaskEntry(t.task_id, "", predict(t)) for t in tasks]
    config = {
        "model": "baseline:frequent",
        "task_ids": [t.task_id for t in tasks],
        "kind": kind,
        "mode": "baseline",
    }
    return RunRecord(
        run_id=_derive_run_id([json.dumps(config, sort_keys=True)]),
        kind=kind,
        config=config,
        entries=entries,
        aggregates=aggregate_discriminative(tasks, entries),
        baseline=True,
    )


# --- persistence -----------------------------------------------------------------------


def trace_to_dict(trace) -> dict:
    from dataclasses import asdict

    return {
        "video_id": trace.video_id,
        "params": trace.params,
        "calls": [asdict(c) for c in trace.calls],
        "analysis": asdict(trace.analysis) if trace.analysis else None,
        "focal": asdict(trace.focal) if trace.focal else None,
        "extensions": [asdict(e) for e in trace.extensions],
        "candidates": [asdict(c) for c in trace.candidates],
        "score_table": [list(map(list, row)) for row in trace.score_table],
        "totals": trace.totals,
        "chosen_index": trace.chosen_index,
        "final_text": trace.final_text,
        "flags": trace.flags,
    }


def record_to_dict(record: RunRecord) -> dict:
    return {
        "run_id": record.run_id,
        "kind": record.kind,
        "config": record.config,
        "baseline": record.baseline,
        "entries": [
            {
                "task_id": e.task_id,
                "raw_text": e.raw_text,
                "parsed": e.parsed,
                "latency_ms": e.latency_ms,
                "flags": list(e.flags),
            }
            for e in record.entries
        ],
        "aggregates": record.aggregates,
    }


def record_from_dict(doc: dict) -> RunRecord:
    return RunRecord(
        run_id=doc["run_id"],
        kind=doc["kind"],
        config=doc["config"],
        entries=[
            TaskEntry(
                task_id=e["task_id"],
                raw_text=e.get("raw_text", ""),
                parsed=e.get("parsed"),
                latency_ms=e.get("latency_ms", 0.0),
                flags=tuple(e.get("flags", [])),
            )
            for e in doc.get("entries", [])
        ],
        aggregates=doc.get("aggregates", {}),
        baseline=doc.get("baseline", False),
    )


def flat_metrics(aggregates: dict, prefix: str = "") -> dict:
    """Flatten nested aggregates into dotted key -> scalar pairs."""
    out: dict = {}
    for key, value in aggregates.items():
        if key == "trials":
            continue
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flat_metrics(value, prefix=f"{name}."))
        elif value is None or isinstance(value, (int, float, str, bool)):
            out[name] = value
    return out


def save_run(record: RunRecord, runs_dir: str | Path, gateway: "Gateway | None" = None) -> Path:
    run_dir = Path(runs_dir) / record.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "record.json").write_text(
        json.dumps(record_to_dict(record), ensure_ascii=False, indent=2, sort_keys=True), "utf-8"
    )
    (run_dir / "metrics.json").write_text(
        json.dumps(flat_metrics(record.aggregates), ensure_ascii=False, indent=2, sort_keys=True),
        "utf-8",
    )
    if gateway is not None:
        gateway.log.save(run_dir / "requests.jsonl")
    return run_dir


def load_run(run_dir: str | Path) -> RunRecord:
    doc = json.loads((Path(run_dir) / "record.json").read_text("utf-8"))
    return record_from_dict(doc)
