"""Deterministic construction of evaluation tasks from video records.

Discriminative tasks follow a [1, m, n] composition: one god-tier comment,
m high-tier distractors drawn from the like-ordered top of the tier, and n
ordinary-tier distractors. Presentation order is a seeded shuffle and answer
keys are kept separable from the model-facing task body.
"""

from __future__ import annotations

import json
import random
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .dataset import Comment, Dataset, VideoRecord

OPTION_LABELS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"

# High-tier distractors are sampled from the top of the like-ordered tier
# so they stay genuinely hard; the pool is this factor times the need.
HIGH_POOL_FACTOR = 2

TASK_KINDS = ("selection", "ranking", "classification", "explanation", "creation", "preference")


class TaskSkipped(Exception):
    """Record cannot yield this task; carries the reason for the skip report."""


@dataclass(frozen=True)
class TaskConfig:
    kind: str
    high_count: int = 0
    ordinary_count: int = 0
    seed: int = 0
    god_count: int = 1

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.god_count != 1:
            raise ValueError("tasks always contain exactly one god comment")
        if self.high_count < 0 or self.ordinary_count < 0:
            raise ValueError("comment counts must be >= 0")

    @property
    def shape(self) -> str:
        return f"[1,{self.high_count},{self.ordinary_count}]"


SELECTION_1_1_1 = TaskConfig("selection", 1, 1)
SELECTION_1_3_0 = TaskConfig("selection", 3, 0)
SELECTION_1_12_0 = TaskConfig("selection", 12, 0)
RANKING_1_4_0 = TaskConfig("ranking", 4, 0)
CLASSIFICATION_1_3_5 = TaskConfig("classification", 3, 5)


@dataclass(frozen=True)
class VideoContext:
    """Model- and annotator-facing video surrogate (never carries answers)."""

    title: str = ""
    ocr_text: str = ""
    subtitle_text: str = ""
    frame_paths: tuple[str, ...] = ()
    duration_s: float = 0.0
    category: str = ""

    @classmethod
    def from_record(cls, record: VideoRecord) -> "VideoContext":
        return cls(
            title=record.title,
            ocr_text=record.ocr_text,
            subtitle_text=record.subtitle_text,
            frame_paths=record.frame_paths,
            duration_s=record.duration_s,
            category=record.category,
        )

    def surrogate_text(self) -> str:
        parts = []
        if self.title:
            parts.append(f"Title: {self.title}")
        if self.ocr_text:
            parts.append(f"On-screen text: {self.ocr_text}")
        if self.subtitle_text:
            parts.append(f"Subtitles: {self.subtitle_text}")
        if not parts:
            parts.append("(no textual video material)")
        return "\n".join(parts)


@dataclass(frozen=True)
class Option:
    label: str
    comment_id: str
    text: str


@dataclass(frozen=True)
class Exemplar:
    video_id: str
    comment_id: str
    text: str
    likes: int


@dataclass(frozen=True)
class TaskInstance:
    task_id: str
    video_id: str
    kind: str
    video: VideoContext
    options: tuple[Option, ...] = ()
    answer_key: object = None
    fewshot_examples: tuple[Exemplar, ...] = ()
    art_dimensions: tuple[str, ...] = ()  # god-comment tag dimensions, for slicing
    comment_text: str = ""  # explanation tasks: the comment being explained

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(o.label for o in self.options)


def _god_dimensions(god: Comment) -> tuple[str, ...]:
    return tuple(sorted({t.dimension for t in god.tags}))


def _like_ordered(comments: Sequence[Comment]) -> list[Comment]:
    return sorted(comments, key=lambda c: (-c.likes, c.comment_id))


def _sample_high(record: VideoRecord, m: int, rng: random.Random) -> list[Comment]:
    highs = _like_ordered(record.by_tier("high"))
    if len(highs) < m:
        raise TaskSkipped(f"{record.video_id}: needs {m} high comments, has {len(highs)}")
    pool = highs[: max(m, HIGH_POOL_FACTOR * m)]
    return rng.sample(pool, m)


def _sample_ordinary(record: VideoRecord, n: int, rng: random.Random) -> list[Comment]:
    ordinaries = sorted(record.by_tier("ordinary"), key=lambda c: c.comment_id)
    if len(ordinaries) < n:
        raise TaskSkipped(f"{record.video_id}: needs {n} ordinary comments, has {len(ordinaries)}")
    return rng.sample(ordinaries, n)


def _assemble_options(comments: Sequence[Comment], rng: random.Random) -> tuple[tuple[Option, ...], dict[str, Comment]]:
    shuffled = list(comments)
    rng.shuffle(shuffled)
    options = tuple(
        Option(label=OPTION_LABELS[i], comment_id=c.comment_id, text=c.text)
        for i, c in enumerate(shuffled)
    )
    return options, {OPTION_LABELS[i]: c for i, c in enumerate(shuffled)}


def build_selection(record: VideoRecord, cfg: TaskConfig, seed: int) -> TaskInstance:
    """One god comment hidden among m high + n ordinary distractors."""
    if cfg.kind != "selection":
        raise ValueError(f"expected a selection config, got {cfg.kind}")
    gods = record.god_comments()
    if not gods:
        raise TaskSkipped(f"{record.video_id}: no god comment")
    god = record.best_god()
    rng = random.Random(seed)
    highs = _sample_high(record, cfg.high_count, rng)
    ordinaries = _sample_ordinary(record, cfg.ordinary_count, rng)
    options, by_label = _assemble_options([god] + highs + ordinaries, rng)
    key = next(label for label, c in by_label.items() if c.comment_id == god.comment_id)
    return TaskInstance(
        task_id=f"selection-1.{cfg.high_count}.{cfg.ordinary_count}-{record.video_id}-s{seed}",
        video_id=record.video_id,
        kind="selection",
        video=VideoContext.from_record(record),
        options=options,
        answer_key=key,
        art_dimensions=_god_dimensions(god),
    )


def build_ranking(record: VideoRecord, seed: int) -> TaskInstance:
    """[1,4,0] ranking; the reference permutation orders by likes."""
    gods = record.god_comments()
    if not gods:
        raise TaskSkipped(f"{record.video_id}: no god comment")
    god = record.best_god()
    highs = _like_ordered(record.by_tier("high"))[:4]
    if len(highs) < 4:
        raise TaskSkipped(f"{record.video_id}: needs 4 high comments, has {len(highs)}")
    if highs[0].likes >= god.likes:
        raise TaskSkipped(f"{record.video_id}: god not top-liked")
    rng = random.Random(seed)
    options, by_label = _assemble_options([god] + highs, rng)
    reference = [
        label
        for label, _ in sorted(by_label.items(), key=lambda kv: (-kv[1].likes, kv[1].comment_id))
    ]
    return TaskInstance(
        task_id=f"ranking-1.4.0-{record.video_id}-s{seed}",
        video_id=record.video_id,
        kind="ranking",
        video=VideoContext.from_record(record),
        options=options,
        answer_key=reference,
        art_dimensions=_god_dimensions(god),
    )


def build_classification(record: VideoRecord, seed: int) -> TaskInstance:
    """[1,3,5] tier classification over nine shuffled options."""
    gods = record.god_comments()
    if not gods:
        raise TaskSkipped(f"{record.video_id}: no god comment")
    god = record.best_god()
    rng = random.Random(seed)
    highs = _sample_high(record, 3, rng)
    ordinaries = _sample_ordinary(record, 5, rng)
    options, by_label = _assemble_options([god] + highs + ordinaries, rng)
    key = {label: c.tier for label, c in by_label.items()}
    return TaskInstance(
        task_id=f"classification-1.3.5-{record.video_id}-s{seed}",
        video_id=record.video_id,
        kind="classification",
        video=VideoContext.from_record(record),
        options=options,
        answer_key=key,
        art_dimensions=_god_dimensions(god),
    )


def build_explanation(record: VideoRecord) -> TaskInstance:
    """Predict the god comment's art tags and explain them."""
    gods = record.god_comments()
    if not gods:
        raise TaskSkipped(f"{record.video_id}: no god comment")
    god = record.best_god()
    if not god.tags:
        raise TaskSkipped(f"{record.video_id}: god comment has no art tags")
    if not god.explanation:
        raise TaskSkipped(f"{record.video_id}: god comment has no gold explanation")
    return TaskInstance(
        task_id=f"explanation-{record.video_id}",
        video_id=record.video_id,
        kind="explanation",
        video=VideoContext.from_record(record),
        comment_text=god.text,
        answer_key={
            "tags": sorted(t.subcategory for t in god.tags),
            "explanation": god.explanation,
        },
        art_dimensions=_god_dimensions(god),
    )


def build_creation(record: VideoRecord) -> TaskInstance:
    """Write a comment from the video context; the god comment is the hidden
    judge reference and is never shown to the model."""
    gods = record.god_comments()
    if not gods:
        raise TaskSkipped(f"{record.video_id}: no god comment")
    god = record.best_god()
    return TaskInstance(
        task_id=f"creation-{record.video_id}",
        video_id=record.video_id,
        kind="creation",
        video=VideoContext.from_record(record),
        answer_key={"reference": god.text},
        art_dimensions=_god_dimensions(god),
    )


def build_preference(record: VideoRecord, sources: Mapping[str, str], seed: int) -> TaskInstance:
    """Anonymized per-source comments for the human preference study."""
    if not sources:
        raise TaskSkipped(f"{record.video_id}: no comment sources")
    rng = random.Random(seed)
    items = sorted(sources.items())
    rng.shuffle(items)
    options = tuple(
        Option(label=OPTION_LABELS[i], comment_id=source, text=text)
        for i, (source, text) in enumerate(items)
    )
    key = {OPTION_LABELS[i]: source for i, (source, _) in enumerate(items)}
    return TaskInstance(
        task_id=f"preference-{record.video_id}-s{seed}",
        video_id=record.video_id,
        kind="preference",
        video=VideoContext.from_record(record),
        options=options,
        answer_key=key,
    )


# --- few-shot exemplars ---------------------------------------------------------


@dataclass(frozen=True)
class FewShotResult:
    exemplars: tuple[Exemplar, ...]
    pool: str  # category | tags | all


def _tag_names(record: VideoRecord) -> frozenset[str]:
    names: set[str] = set()
    for god in record.god_comments():
        names.update(t.subcategory for t in god.tags)
    return frozenset(names)


def select_few_shot(target: VideoRecord, train: Dataset, seed: int) -> FewShotResult:
    """Five exemplar god comments from ten seeded candidate videos.

    Candidate pool: the target's category; if that holds fewer than ten
    records, records sharing at least one god-comment tag; failing that,
    all of train. Exemplars are ranked by length then likes.
    """
    if not train.records:
        raise ValueError("training set is empty")
    others = [r for r in train.records if r.video_id != target.video_id and r.god_comments()]
    same_category = [r for r in others if r.category == target.category]
    if len(same_category) >= 10:
        pool, pool_name = same_category, "category"
    else:
        target_tags = _tag_names(target)
        tagged = [r for r in others if _tag_names(r) & target_tags]
        if len(tagged) >= 10:
            pool, pool_name = tagged, "tags"
        else:
            pool, pool_name = others, "all"
    if not pool:
        raise ValueError("no candidate videos available for few-shot selection")

    rng = random.Random(seed)
    ordered = sorted(pool, key=lambda r: r.video_id)
    candidates = rng.sample(ordered, min(10, len(ordered)))
    exemplars = [
        Exemplar(r.video_id, god.comment_id, god.text, god.likes)
        for r in candidates
        for god in [r.best_god()]
    ]
    ranked = sorted(exemplars, key=lambda e: (-len(e.text), -e.likes, e.comment_id, e.video_id))
    return FewShotResult(tuple(ranked[:5]), pool_name)


def attach_few_shot(task: TaskInstance, result: FewShotResult) -> TaskInstance:
    """Attach exemplars, dropping any whose text collides with an option."""
    option_texts = {o.text for o in task.options}
    kept = tuple(e for e in result.exemplars if e.text not in option_texts)
    return replace(task, fewshot_examples=kept)


# --- batch construction -----------------------------------------------------------


@dataclass(frozen=True)
class SkipReport:
    video_id: str
    kind: str
    reason: str


def derive_seed(base_seed: int, cfg: TaskConfig, video_id: str) -> int:
    tag = f"{cfg.kind}-1.{cfg.high_count}.{cfg.ordinary_count}-{video_id}"
    return base_seed ^ zlib.crc32(tag.encode("utf-8"))


def build_tasks(
    dataset: Dataset,
    configs: Iterable[TaskConfig],
    base_seed: int = 0,
) -> tuple[list[TaskInstance], list[SkipReport]]:
    """All tasks for every (record, config) pair, with a skip report."""
    tasks: list[TaskInstance] = []
    skips: list[SkipReport] = []
    for cfg in configs:
        for record in dataset.records:
            seed = derive_seed(base_seed, cfg, record.video_id)
            try:
                if cfg.kind == "selection":
                    tasks.append(build_selection(record, cfg, seed))
                elif cfg.kind == "ranking":
                    tasks.append(build_ranking(record, seed))
                elif cfg.kind == "classification":
                    tasks.append(build_classification(record, seed))
                elif cfg.kind == "explanation":
                    tasks.append(build_explanation(record))
                elif cfg.kind == "creation":
                    tasks.append(build_creation(record))
                else:
                    raise ValueError(f"cannot batch-build kind {cfg.kind!r}")
            except TaskSkipped as e:
                skips.append(SkipReport(record.video_id, cfg.kind, str(e)))
    return tasks, skips


# --- manifest persistence -----------------------------------------------------------


def task_to_dict(task: TaskInstance, include_key: bool = True) -> dict:
    doc = {
        "task_id": task.task_id,
        "video_id": task.video_id,
        "kind": task.kind,
        "video": {
            "title": task.video.title,
            "ocr_text": task.video.ocr_text,
            "subtitle_text": task.video.subtitle_text,
            "frame_paths": list(task.video.frame_paths),
            "duration_s": task.video.duration_s,
            "category": task.video.category,
        },
        "options": [[o.label, o.comment_id, o.text] for o in task.options],
        "fewshot_examples": [
            [e.video_id, e.comment_id, e.text, e.likes] for e in task.fewshot_examples
        ],
        "art_dimensions": list(task.art_dimensions),
        "comment_text": task.comment_text,
    }
    if include_key:
        doc["answer_key"] = task.answer_key
    return doc


def task_from_dict(doc: dict, answer_key: object = None) -> TaskInstance:
    video = doc.get("video", {})
    return TaskInstance(
        task_id=doc["task_id"],
        video_id=doc["video_id"],
        kind=doc["kind"],
        video=VideoContext(
            title=video.get("title", ""),
            ocr_text=video.get("ocr_text", ""),
            subtitle_text=video.get("subtitle_text", ""),
            frame_paths=tuple(video.get("frame_paths", [])),
            duration_s=video.get("duration_s", 0.0),
            category=video.get("category", ""),
        ),
        options=tuple(Option(*o) for o in doc.get("options", [])),
        answer_key=doc.get("answer_key", answer_key),
        fewshot_examples=tuple(Exemplar(*e) for e in doc.get("fewshot_examples", [])),
        art_dimensions=tuple(doc.get("art_dimensions", [])),
        comment_text=doc.get("comment_text", ""),
    )


def task_bytes(task: TaskInstance) -> bytes:
    """Canonical serialization, for determinism checks."""
    return json.dumps(
        task_to_dict(task, include_key=True), ensure_ascii=False, sort_keys=True
    ).encode("utf-8")


def write_task_manifest(
    tasks: Sequence[TaskInstance], tasks_path: str | Path, keys_path: str | Path
) -> None:
    """Model-facing manifest without keys; keys in a separate keyed file."""
    with Path(tasks_path).open("w", encoding="utf-8") as f:
        for t in tasks:
            f.write(json.dumps(task_to_dict(t, include_key=False), ensure_ascii=False, sort_keys=True))
            f.write("\n")
    with Path(keys_path).open("w", encoding="utf-8") as f:
        for t in tasks:
            f.write(json.dumps({"task_id": t.task_id, "answer_key": t.answer_key}, ensure_ascii=False, sort_keys=True))
            f.write("\n")


def load_task_manifest(
    tasks_path: str | Path, keys_path: "str | Path | None" = None
) -> list[TaskInstance]:
    keys: dict[str, object] = {}
    if keys_path is not None:
        with Path(keys_path).open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    doc = json.loads(line)
                    keys[doc["task_id"]] = doc["answer_key"]
    tasks = []
    with Path(tasks_path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                doc = json.loads(line)
                tasks.append(task_from_dict(doc, answer_key=keys.get(doc["task_id"])))
    return tasks
