"""Video-comment data model, JSONL loading, validation, and stratified splits.

A dataset file holds one video record per line as JSON, comments inlined.
Missing optional text fields default to empty strings, never null, so
downstream prompt assembly is total.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from .taxonomy import ArtTag, Taxonomy, UnknownTagError, default_taxonomy

TIERS = ("god", "high", "ordinary")


class DatasetError(ValueError):
    """Fatal dataset problem (strict loading or unusable input)."""


@dataclass(frozen=True)
class Comment:
    comment_id: str
    text: str
    likes: int
    tier: str
    tags: tuple[ArtTag, ...] = ()
    explanation: str = ""  # human-annotated rationale; required for explanation tasks


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    title: str = ""
    duration_s: float = 0.0
    category: str = ""
    subcategory: str = ""
    ocr_text: str = ""
    subtitle_text: str = ""
    frame_paths: tuple[str, ...] = ()
    comments: tuple[Comment, ...] = ()

    def by_tier(self, tier: str) -> tuple[Comment, ...]:
        return tuple(c for c in self.comments if c.tier == tier)

    def god_comments(self) -> tuple[Comment, ...]:
        return self.by_tier("god")

    def best_god(self) -> Comment:
        """The answer/reference god comment: most likes, ties to smaller id."""
        gods = self.god_comments()
        if not gods:
            raise DatasetError(f"record {self.video_id} has no god-tier comment")
        return min(gods, key=lambda c: (-c.likes, c.comment_id))

    def surrogate_text(self) -> str:
        """Textual stand-in for frames: title + OCR + subtitles."""
        parts = []
        if self.title:
            parts.append(f"Title: {self.title}")
        if self.ocr_text:
            parts.append(f"On-screen text: {self.ocr_text}")
        if self.subtitle_text:
            parts.append(f"Subtitles: {self.subtitle_text}")
        return "\n".join(parts)


@dataclass(frozen=True)
class LineError:
    line: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Dataset:
    records: tuple[VideoRecord, ...] = ()
    taxonomy_version: str = ""
    errors: tuple[LineError, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self, video_id: str) -> VideoRecord:
        for r in self.records:
            if r.video_id == video_id:
                return r
        raise KeyError(video_id)


def validate_record(record: VideoRecord, taxonomy: Taxonomy | None = None) -> ValidationReport:
    """List every violated invariant of a record; never raises."""
    tax = taxonomy or default_taxonomy()
    violations: list[str] = []
    if not record.video_id:
        violations.append("video_id must be non-empty")
    if record.duration_s < 0:
        violations.append("duration_s >= 0")
    if record.category and not tax.is_category(record.category):
        violations.append(f"category {record.category!r} not in the closed category list")
    seen_ids: set[str] = set()
    for c in record.comments:
        where = f"comment {c.comment_id!r}"
        if not c.comment_id:
            violations.append("comment_id must be non-empty")
        elif c.comment_id in seen_ids:
            violations.append(f"{where}: comment_id not unique within record")
        else:
            seen_ids.add(c.comment_id)
        if not c.text:
            violations.append(f"{where}: text must be non-empty")
        if c.likes < 0:
            violations.append(f"{where}: likes >= 0")
        if c.tier not in TIERS:
            violations.append(f"{where}: tier {c.tier!r} not one of {TIERS}")
        for tag in c.tags:
            if not tax.is_valid(tag.dimension, tag.subcategory):
                violations.append(
                    f"{where}: tag {tag.subcategory!r} does not belong to dimension {tag.dimension}"
                )
    if not any(c.tier == "god" for c in record.comments):
        violations.append("record must contain at least one god-tier comment")
    return ValidationReport(tuple(violations))


def _comment_from_dict(raw: dict, taxonomy: Taxonomy) -> Comment:
    tags = []
    for t in raw.get("tags", []) or []:
        if isinstance(t, str):
            tags.append(taxonomy.parse_tag(t))
        else:
            tags.append(ArtTag(str(t["dimension"]), str(t["subcategory"])))
    return Comment(
        comment_id=str(raw["comment_id"]),
        text=str(raw.get("text") or ""),
        likes=int(raw.get("likes", 0)),
        tier=str(raw.get("tier") or ""),
        tags=tuple(tags),
        explanation=str(raw.get("explanation") or ""),
    )


def record_from_dict(raw: dict, taxonomy: Taxonomy | None = None) -> VideoRecord:
    tax = taxonomy or default_taxonomy()
    return VideoRecord(
        video_id=str(raw["video_id"]),
        title=str(raw.get("title") or ""),
        duration_s=float(raw.get("duration_s", 0.0)),
        category=str(raw.get("category") or ""),
        subcategory=str(raw.get("subcategory") or ""),
        ocr_text=str(raw.get("ocr_text") or ""),
        subtitle_text=str(raw.get("subtitle_text") or ""),
        frame_paths=tuple(str(p) for p in raw.get("frame_paths", []) or []),
        comments=tuple(_comment_from_dict(c, tax) for c in raw.get("comments", []) or []),
    )


def record_to_dict(record: VideoRecord) -> dict:
    return {
        "video_id": record.video_id,
        "title": record.title,
        "duration_s": record.duration_s,
        "category": record.category,
        "subcategory": record.subcategory,
        "ocr_text": record.ocr_text,
        "subtitle_text": record.subtitle_text,
        "frame_paths": list(record.frame_paths),
        "comments": [
            {
                "comment_id": c.comment_id,
                "text": c.text,
                "likes": c.likes,
                "tier": c.tier,
                "tags": [t.subcategory for t in c.tags],
                "explanation": c.explanation,
            }
            for c in record.comments
        ],
    }


def load_dataset(
    path: str | Path,
    taxonomy: Taxonomy | None = None,
    strict: bool = False,
) -> Dataset:
    """Load a line-delimited dataset, validating every record.

    Invalid lines are skipped and reported with their line numbers in
    ``Dataset.errors``; with ``strict=True`` the first problem raises.
    """
    tax = taxonomy or default_taxonomy()
    p = Path(path)
    records: list[VideoRecord] = []
    errors: list[LineError] = []
    seen: set[str] = set()

    def fail(line: int, message: str) -> None:
        if strict:
            raise DatasetError(f"{p}:{line}: {message}")
        errors.append(LineError(line, message))

    with p.open("r", encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                fail(i, f"malformed line: {e.msg}")
                continue
            try:
                record = record_from_dict(raw, tax)
            except (KeyError, TypeError, ValueError, UnknownTagError) as e:
                fail(i, f"bad record: {e}")
                continue
            report = validate_record(record, tax)
            if not report.ok:
                fail(i, "; ".join(report.violations))
                continue
            if record.video_id in seen:
                fail(i, f"duplicate video_id {record.video_id!r}")
                continue
            seen.add(record.video_id)
            records.append(record)
    return Dataset(tuple(records), taxonomy_version=tax.version, errors=tuple(errors))


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    p = Path(path)
    with p.open("w", encoding="utf-8") as f:
        for r in dataset.records:
            f.write(json.dumps(record_to_dict(r), ensure_ascii=False, sort_keys=True))
            f.write("\n")


def _largest_remainder(counts: dict[str, int], total_share: int, denom: int) -> dict[str, int]:
    """Apportion total_share across categories proportionally to counts/denom."""
    base = {c: n // denom for c, n in counts.items()}
    leftover = total_share - sum(base.values())
    by_fraction = sorted(counts, key=lambda c: (-(counts[c] % denom), c))
    for c in by_fraction:
        if leftover <= 0:
            break
        base[c] += 1
        leftover -= 1
    return base


def split_dataset(dataset: Dataset, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic stratified 10:1:1 split; remainders go to train.

    Validation and test each take floor(N/12) records globally; per-category
    shares are apportioned by largest remainder so category proportions hold
    within one record.
    """
    if not dataset.records:
        raise DatasetError("cannot split an empty dataset")
    n = len(dataset.records)
    val_total = n // 12
    test_total = n // 12

    by_category: dict[str, list[VideoRecord]] = {}
    for r in dataset.records:
        by_category.setdefault(r.category, []).append(r)
    counts = {c: len(rs) for c, rs in by_category.items()}

    val_share = _largest_remainder(counts, val_total, 12)
    test_share = _largest_remainder(counts, test_total, 12)
    # A tiny category can be asked for more holdout records than it has;
    # shift the excess to the categories with the most spare capacity.
    for c in sorted(counts):
        excess = val_share[c] + test_share[c] - counts[c]
        while excess > 0:
            test_share[c] -= 1
            excess -= 1
            donee = max(
                sorted(counts),
                key=lambda d: counts[d] - val_share[d] - test_share[d],
            )
            test_share[donee] += 1

    rng = random.Random(seed)
    train: list[VideoRecord] = []
    val: list[VideoRecord] = []
    test: list[VideoRecord] = []
    for c in sorted(by_category):
        rs = sorted(by_category[c], key=lambda r: r.video_id)
        rng.shuffle(rs)
        v, t = val_share[c], test_share[c]
        val.extend(rs[:v])
        test.extend(rs[v : v + t])
        train.extend(rs[v + t :])

    def mk(records: list[VideoRecord]) -> Dataset:
        ordered = tuple(sorted(records, key=lambda r: r.video_id))
        return replace(dataset, records=ordered, errors=())

    return mk(train), mk(val), mk(test)


def split_manifest(train: Dataset, val: Dataset, test: Dataset) -> str:
    """Canonical JSON listing of split membership, for byte-identity checks."""
    doc = {
        "train": [r.video_id for r in train.records],
        "validation": [r.video_id for r in val.records],
        "test": [r.video_id for r in test.records],
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=0)
