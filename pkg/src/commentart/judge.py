"""LLM-as-judge scoring for explanation and creation outputs, plus entity
extraction for overlap scoring with a deterministic offline fallback.

Composites are always recomputed locally from the parsed per-criterion
scores; the judge model's own arithmetic is never trusted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .gateway import Gateway, make_request
from .metrics import EntitySet
from .prompts import REPAIR_SUFFIX, PromptPack
from .ripple.xmlio import StructureParseError, extract_element

EXPLANATION_CRITERIA = ("Precision", "Reasonableness", "Completeness", "Relevance", "Clarity")
EXPLANATION_WEIGHTS = (5.0, 3.0, 2.0, 2.0, 1.0)
CREATION_CRITERIA = ("Creativity", "Quality", "Style", "Impact")
CREATION_WEIGHTS = (1.0, 1.0, 1.0, 1.0)

JUDGE_TEMPERATURE = 0.0


class JudgeParseError(RuntimeError):
    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class CriterionScores:
    task_kind: str  # explanation | creation
    scores: tuple[tuple[str, float], ...]
    weights: tuple[float, ...]
    clamped: bool = False  # true when any raw score was pulled into [0, 5]
    raw_text: str = ""  # the judge's verbatim reply, persisted with runs

    @property
    def composite_raw(self) -> float:
        return sum(w * s for w, (_, s) in zip(self.weights, self.scores))

    @property
    def composite_norm(self) -> float:
        return self.composite_raw / (5.0 * sum(self.weights))

    def to_dict(self) -> dict:
        return {
            "task_kind": self.task_kind,
            "scores": [[name, value] for name, value in self.scores],
            "weights": list(self.weights),
            "clamped": self.clamped,
            "composite_raw": self.composite_raw,
            "composite_norm": self.composite_norm,
            "raw_text": self.raw_text,
        }


def _parse_criterion_scores(text: str, criteria: Sequence[str]) -> tuple[list[float], bool]:
    root = extract_element(text, "scores")
    values = []
    clamped = False
    for name in criteria:
        el = root.find(name.lower())
        if el is None or el.text is None:
            raise StructureParseError(f"missing score for {name}", raw=text)
        try:
            value = float(el.text.strip())
        except ValueError:
            raise StructureParseError(f"non-numeric score for {name}", raw=text)
        bounded = min(5.0, max(0.0, value))
        if bounded != value:
            clamped = True
        values.append(bounded)
    return values, clamped


def _judge_call(
    gateway: Gateway,
    prompt: str,
    criteria: Sequence[str],
    model_id: str,
    max_tokens: int,
) -> tuple[list[float], bool, str]:
    attempt_prompt = prompt
    last: "StructureParseError | None" = None
    for _ in range(2):  # one repair retry
        request = make_request(
            model_id,
            attempt_prompt,
            temperature=JUDGE_TEMPERATURE,
            max_tokens=max_tokens,
            metadata={"phase": "judge"},
        )
        response = gateway.complete(request)
        try:
            values, clamped = _parse_criterion_scores(response.text, criteria)
            return values, clamped, response.text
        except StructureParseError as e:
            last = e
            attempt_prompt = prompt + REPAIR_SUFFIX
    raise JudgeParseError(str(last), raw=last.raw if last else "")


def judge_explanation(
    predicted_tags: Iterable[str],
    predicted_text: str,
    gold_tags: Iterable[str],
    gold_text: str,
    gateway: Gateway,
    prompt_pack: "PromptPack | None" = None,
    model_id: str = "judge",
    max_tokens: int = 256,
) -> CriterionScores:
    if not gold_text:
        raise ValueError("gold explanation is required")
    prompts = prompt_pack or PromptPack()
    prompt = prompts.render(
        "judge_explanation",
        gold_tags=", ".join(gold_tags) or "(none)",
        gold_text=gold_text,
        predicted_tags=", ".join(predicted_tags) or "(none)",
        predicted_text=predicted_text,
    )
    values, clamped, raw = _judge_call(gateway, prompt, EXPLANATION_CRITERIA, model_id, max_tokens)
    return CriterionScores(
        task_kind="explanation",
        scores=tuple(zip(EXPLANATION_CRITERIA, values)),
        weights=EXPLANATION_WEIGHTS,
        clamped=clamped,
        raw_text=raw,
    )


def judge_creation(
    comment: str,
    god_reference: str,
    gateway: Gateway,
    prompt_pack: "PromptPack | None" = None,
    model_id: str = "judge",
    max_tokens: int = 256,
) -> CriterionScores:
    if not god_reference:
        raise ValueError("reference comment is required")
    prompts = prompt_pack or PromptPack()
    prompt = prompts.render("judge_creation", reference=god_reference, comment=comment)
    values, clamped, raw = _judge_call(gateway, prompt, CREATION_CRITERIA, model_id, max_tokens)
    return CriterionScores(
        task_kind="creation",
        scores=tuple(zip(CREATION_CRITERIA, values)),
        weights=CREATION_WEIGHTS,
        clamped=clamped,
        raw_text=raw,
    )


# --- entity extraction ---------------------------------------------------------

# Function words filtered by the offline fallback; kept deliberately small
# and documented so overlap scores are reproducible without a network.
OFFLINE_STOPLIST = frozenset(
    """
    a an the this that these those and or but of in on at to for with from by
    as is are was were be been being it its he she they them his her their i
    you we me my your our us not no so too very just then than when what who
    的 了 是 在 我 你 他 她 它 们 这 那 和 与 或 就 都 很 也 还 吗 呢 吧 啊
    """.split()
)

_ENTITY_TOKEN_RE = re.compile(r"[A-Za-z0-9]+|[一-鿿㐀-䶿]+")


@dataclass(frozen=True)
class EntityExtraction:
    entities: EntitySet
    mode: str  # online | offline
    empty: bool = False


def _offline_entities(comment: str, stoplist: frozenset) -> EntitySet:
    tokens = _ENTITY_TOKEN_RE.findall(comment)
    kept = [t for t in tokens if t.casefold() not in stoplist]
    return EntitySet.from_strings(kept)


def extract_entities(
    comment: str,
    gateway: "Gateway | None" = None,
    prompt_pack: "PromptPack | None" = None,
    model_id: str = "judge",
    stoplist: frozenset = OFFLINE_STOPLIST,
) -> EntityExtraction:
    """Entity set for a comment: one gateway call online, token fallback offline."""
    if not comment:
        raise ValueError("comment must be non-empty")
    if gateway is None:
        entities = _offline_entities(comment, stoplist)
        return EntityExtraction(entities, mode="offline", empty=not len(entities))

    prompts = prompt_pack or PromptPack()
    prompt = prompts.render("extract_entities", comment=comment)
    request = make_request(
        model_id,
        prompt,
        temperature=JUDGE_TEMPERATURE,
        max_tokens=512,
        metadata={"phase": "extract_entities"},
    )
    response = gateway.complete(request)
    try:
        root = extract_element(response.text, "entities")
        raw = [el.text or "" for el in root.findall("entity")]
    except StructureParseError:
        raw = []
    entities = EntitySet.from_strings(raw)
    return EntityExtraction(entities, mode="online", empty=not len(entities))
