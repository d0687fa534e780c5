"""Parsing between model reply text and the pipeline's XML intermediates.

Replies often wrap the XML in code fences or prose, so each parser first
carves out the expected root element before handing it to ElementTree.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape

from .types import (
    AdvancedAnalysis,
    AnalysisQ,
    BasicAnalysis,
    EntityX,
    EnvironmentE,
    Extension,
    FocalSet,
    IntermediateAnalysis,
    StorylineS,
)


class StructureParseError(ValueError):
    """Model reply did not match the expected structure; carries raw text."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


def extract_element(text: str, tag: str) -> ET.Element:
    """Locate and parse the first <tag>...</tag> block in free-form text."""
    cleaned = re.sub(r"```[a-zA-Z]*\n?", "", text)
    match = re.search(rf"<{tag}[\s>].*?</{tag}>|<{tag}>.*?</{tag}>", cleaned, re.DOTALL)
    if match is None:
        raise StructureParseError(f"no <{tag}> element found", raw=text)
    snippet = match.group(0)
    snippet = re.sub(r"&(?!amp;|lt;|gt;|apos;|quot;|#)", "&amp;", snippet)
    try:
        return ET.fromstring(snippet)
    except ET.ParseError as e:
        raise StructureParseError(f"malformed <{tag}> element: {e}", raw=text) from e


def _text(el: "ET.Element | None") -> str:
    if el is None or el.text is None:
        return ""
    return el.text.strip()


def _texts(parent: "ET.Element | None", child_tag: str) -> tuple[str, ...]:
    if parent is None:
        return ()
    return tuple(_text(c) for c in parent.findall(child_tag))


# --- phase 1: three-layer analysis -----------------------------------------


def parse_analysis(text: str) -> AnalysisQ:
    root = extract_element(text, "analysis")
    basic = root.find("basic")
    intermediate = root.find("intermediate")
    advanced = root.find("advanced")
    missing = [
        name
        for name, el in (("basic", basic), ("intermediate", intermediate), ("advanced", advanced))
        if el is None
    ]
    if missing:
        raise StructureParseError(f"analysis missing layer(s): {', '.join(missing)}", raw=text)
    return AnalysisQ(
        basic=BasicAnalysis(
            ocr=_text(basic.find("ocr")),
            subtitles=_text(basic.find("subtitles")),
            caption=_text(basic.find("caption")),
        ),
        intermediate=IntermediateAnalysis(
            video_type=_text(intermediate.find("video_type")),
            characters=_texts(intermediate.find("characters"), "character"),
            objects=_texts(intermediate.find("objects"), "object"),
            event_sequence=_texts(intermediate.find("event_sequence"), "event"),
        ),
        advanced=AdvancedAnalysis(
            emotional_tone=_text(advanced.find("emotional_tone")),
            cultural_context=_text(advanced.find("cultural_context")),
            social_values=_text(advanced.find("social_values")),
        ),
    )


def analysis_to_text(q: AnalysisQ) -> str:
    """Render an analysis back into prompt-friendly text."""
    lines = [
        f"OCR: {q.basic.ocr}",
        f"Subtitles: {q.basic.subtitles}",
        f"Caption: {q.basic.caption}",
        f"Video type: {q.intermediate.video_type}",
        f"Characters: {', '.join(q.intermediate.characters)}",
        f"Objects: {', '.join(q.intermediate.objects)}",
        "Events: " + "; ".join(q.intermediate.event_sequence),
        f"Emotional tone: {q.advanced.emotional_tone}",
        f"Cultural context: {q.advanced.cultural_context}",
        f"Social values: {q.advanced.social_values}",
    ]
    return "\n".join(lines)


# --- phase 2: focal set ------------------------------------------------------


def _parse_entity(el: ET.Element) -> EntityX:
    return EntityX(
        type=_text(el.find("type")),
        identity=_text(el.find("identity")),
        attributes=_text(el.find("attributes")),
    )


def _parse_storyline(el: ET.Element, default_sequence: int) -> StorylineS:
    seq_text = _text(el.find("sequence"))
    try:
        seq = int(seq_text)
    except ValueError:
        seq = default_sequence
    return StorylineS(
        action=_text(el.find("action")),
        subject=_text(el.find("subject")),
        object=_text(el.find("object")),
        sequence=seq,
    )


def _parse_environment(el: ET.Element) -> EnvironmentE:
    refs = _text(el.find("entities"))
    return EnvironmentE(
        location=_text(el.find("location")),
        time=_text(el.find("time")),
        context=_text(el.find("context")),
        entity_refs=tuple(r.strip() for r in refs.split(",") if r.strip()),
    )


def parse_focal(text: str) -> FocalSet:
    root = extract_element(text, "focal")
    entities = tuple(_parse_entity(e) for e in root.findall("./entities/entity"))
    raw_storylines = [
        _parse_storyline(e, i + 1) for i, e in enumerate(root.findall("./storylines/storyline"))
    ]
    environments = tuple(_parse_environment(e) for e in root.findall("./environments/environment"))
    if not entities or not raw_storylines or not environments:
        raise StructureParseError(
            "focal set needs at least one entity, storyline, and environment", raw=text
        )
    ordered = sorted(raw_storylines, key=lambda s: s.sequence)
    storylines = tuple(
        StorylineS(s.action, s.subject, s.object, i + 1) for i, s in enumerate(ordered)
    )
    identities = {e.identity for e in entities}
    warnings = []
    for s in storylines:
        for role, name in (("subject", s.subject), ("object", s.object)):
            if name and name not in identities:
                warnings.append(f"storyline {s.sequence}: {role} {name!r} not in entity set")
    return FocalSet(entities, storylines, environments, tuple(warnings))


def focal_to_text(focal: FocalSet) -> str:
    lines = ["Entities:"]
    for e in focal.entities:
        lines.append(f"- ({e.type}, {e.identity}, {e.attributes})")
    lines.append("Storylines:")
    for s in focal.storylines:
        lines.append(f"- [{s.sequence}] ({s.action}, {s.subject}, {s.object})")
    lines.append("Environments:")
    for env in focal.environments:
        lines.append(
            f"- ({env.location}, {env.time}, {env.context}, {', '.join(env.entity_refs)})"
        )
    return "\n".join(lines)


def storylines_to_text(storylines) -> str:
    return "\n".join(
        f"- [{s.sequence}] ({s.action}, {s.subject}, {s.object})" for s in storylines
    )


# --- diffusion ---------------------------------------------------------------


def parse_extension_triple(text: str) -> tuple[EntityX, StorylineS, EnvironmentE]:
    root = extract_element(text, "extension")
    entity_el = root.find("entity")
    storyline_el = root.find("storyline")
    environment_el = root.find("environment")
    missing = [
        name
        for name, el in (
            ("entity", entity_el),
            ("storyline", storyline_el),
            ("environment", environment_el),
        )
        if el is None
    ]
    if missing:
        raise StructureParseError(f"extension missing: {', '.join(missing)}", raw=text)
    return (
        _parse_entity(entity_el),
        _parse_storyline(storyline_el, default_sequence=0),
        _parse_environment(environment_el),
    )


def extension_to_text(ext: Extension) -> str:
    e, s, env = ext.entity, ext.storyline, ext.environment
    return (
        f"Entity: ({e.type}, {e.identity}, {e.attributes})\n"
        f"Storyline: [{s.sequence}] ({s.action}, {s.subject}, {s.object})\n"
        f"Environment: ({env.location}, {env.time}, {env.context}, "
        f"{', '.join(env.entity_refs)})"
    )


def parse_elements(text: str) -> tuple[str, ...]:
    root = extract_element(text, "elements")
    return tuple(t for t in (_text(e) for e in root.findall("element")) if t)


def parse_comment(text: str) -> str:
    try:
        root = extract_element(text, "comment")
        return (root.text or "").strip()
    except StructureParseError:
        return text.strip()


def parse_final(text: str) -> str:
    try:
        root = extract_element(text, "final")
        return (root.text or "").strip()
    except StructureParseError:
        return text.strip()


# --- interference scoring ----------------------------------------------------


def parse_score_table(
    text: str, expected_candidates: int, dimensions: tuple[str, ...]
) -> list[tuple[tuple[str, float], ...]]:
    """Per-candidate dimension scores; every candidate must carry exactly
    the configured dimensions."""
    root = extract_element(text, "scores")
    rows: dict[int, tuple[tuple[str, float], ...]] = {}
    for cand in root.findall("candidate"):
        try:
            index = int(cand.get("index", ""))
        except ValueError:
            raise StructureParseError("candidate without a numeric index", raw=text)
        children = [c for c in cand]
        got = tuple(c.tag for c in children)
        if got != tuple(dimensions):
            raise StructureParseError(
                f"candidate {index}: expected dimensions {list(dimensions)}, got {list(got)}",
                raw=text,
            )
        scores = []
        for c in children:
            try:
                value = float(_text(c))
            except ValueError:
                raise StructureParseError(
                    f"candidate {index}: non-numeric score for {c.tag}", raw=text
                )
            scores.append((c.tag, min(10.0, max(0.0, value))))
        rows[index] = tuple(scores)
    if sorted(rows) != list(range(1, expected_candidates + 1)):
        raise StructureParseError(
            f"expected candidates 1..{expected_candidates}, got {sorted(rows)}", raw=text
        )
    return [rows[i] for i in range(1, expected_candidates + 1)]


def xml_escape(text: str) -> str:
    return escape(text)
