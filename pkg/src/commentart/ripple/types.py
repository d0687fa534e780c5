"""Structured intermediates for the five-phase ripple reasoning pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

ASSOCIATION_KINDS = ("sequential", "jumping", "branching", "embedded")

DEFAULT_SCORE_DIMENSIONS = (
    "relevance",
    "creativity",
    "engagement",
    "resonance",
    "fluency",
    "safety",
)


@dataclass(frozen=True)
class BasicAnalysis:
    ocr: str = ""
    subtitles: str = ""
    caption: str = ""


@dataclass(frozen=True)
class IntermediateAnalysis:
    video_type: str = ""
    characters: tuple[str, ...] = ()
    objects: tuple[str, ...] = ()
    event_sequence: tuple[str, ...] = ()


@dataclass(frozen=True)
class AdvancedAnalysis:
    emotional_tone: str = ""
    cultural_context: str = ""
    social_values: str = ""


@dataclass(frozen=True)
class AnalysisQ:
    """Three-layer video analysis produced by the first phase."""

    basic: BasicAnalysis
    intermediate: IntermediateAnalysis
    advanced: AdvancedAnalysis


@dataclass(frozen=True)
class EntityX:
    type: str
    identity: str
    attributes: str = ""


@dataclass(frozen=True)
class StorylineS:
    action: str
    subject: str
    object: str
    sequence: int


@dataclass(frozen=True)
class EnvironmentE:
    location: str
    time: str
    context: str
    entity_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class FocalSet:
    """Entity/storyline/environment tuples extracted by the second phase.

    Storyline sequences are renumbered 1..n on construction order; dangling
    subject/object references are kept as warnings, not errors.
    """

    entities: tuple[EntityX, ...]
    storylines: tuple[StorylineS, ...]
    environments: tuple[EnvironmentE, ...]
    warnings: tuple[str, ...] = ()

    def identities(self) -> frozenset[str]:
        return frozenset(e.identity for e in self.entities)


@dataclass(frozen=True)
class Extension:
    """One new (entity, storyline, environment) triple from an association."""

    kind: str  # sequential | jumping | branching | embedded
    entity: EntityX
    storyline: StorylineS
    environment: EnvironmentE
    novel: bool = True  # False when the entity identity already existed
    k: int = 0  # jumping: extra association hops
    m: int = 0  # branching: storyline prefix length
    elements: tuple[str, ...] = ()  # embedded: elicited cultural elements
    hops: tuple["Extension", ...] = ()  # jumping: intermediate triples
    used_sequences: tuple[int, ...] = ()
    fallback: bool = False  # embedded: elicitaton failed, sequential-style call used


@dataclass(frozen=True)
class CandidateComment:
    text: str
    source_kind: str


@dataclass(frozen=True)
class ScoredComment:
    text: str
    source_kind: str
    scores: tuple[tuple[str, float], ...]  # dimension -> 0..10

    @property
    def total(self) -> float:
        return sum(v for _, v in self.scores)


@dataclass(frozen=True)
class CallRecord:
    phase: str
    request_hash: str
    response_text: str


@dataclass
class RoTTrace:
    """Full audit record of one pipeline run."""

    video_id: str
    params: dict
    calls: list[CallRecord] = field(default_factory=list)
    analysis: "AnalysisQ | None" = None
    focal: "FocalSet | None" = None
    extensions: list[Extension] = field(default_factory=list)
    candidates: list[CandidateComment] = field(default_factory=list)
    score_table: list[tuple[tuple[str, float], ...]] = field(default_factory=list)
    totals: list[float] = field(default_factory=list)
    chosen_index: int = -1
    final_text: str = ""
    flags: list[str] = field(default_factory=list)

    @property
    def gateway_calls(self) -> int:
        return len(self.calls)
