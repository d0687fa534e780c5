"""Five-phase ripple reasoning pipeline over a gateway.

Phases run strictly in order within one run; structured replies are
schema-validated with a bounded number of repair re-asks, and all judge
arithmetic (totals, argmax) is recomputed locally rather than trusted from
the model.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Sequence

from ..gateway import Gateway, make_request
from ..prompts import REPAIR_SUFFIX, PromptPack
from . import xmlio
from .types import (
    ASSOCIATION_KINDS,
    DEFAULT_SCORE_DIMENSIONS,
    AnalysisQ,
    CallRecord,
    CandidateComment,
    EntityX,
    Extension,
    FocalSet,
    RoTTrace,
    ScoredComment,
    StorylineS,
)
from .xmlio import StructureParseError

DEFAULT_LENGTH_CAP = 60  # chars; roughly 3x the typical top-comment length


class PhaseError(RuntimeError):
    """A phase failed after its repair retries; carries the phase name."""

    def __init__(self, phase: str, message: str, raw: str = ""):
        super().__init__(f"{phase}: {message}")
        self.phase = phase
        self.raw = raw


def _video_context(video) -> str:
    parts = []
    title = getattr(video, "title", "")
    if title:
        parts.append(f"Title: {title}")
    ocr = getattr(video, "ocr_text", "")
    if ocr:
        parts.append(f"On-screen text: {ocr}")
    subs = getattr(video, "subtitle_text", "")
    if subs:
        parts.append(f"Subtitles: {subs}")
    if not parts:
        parts.append("(no textual video material)")
    return "\n".join(parts)


def pick_branch_index(focal: FocalSet) -> int:
    """Default branching prefix: end at the storyline whose entities are
    mentioned least across the whole storyline set (the overlooked one)."""
    mentions: dict[str, int] = {}
    for s in focal.storylines:
        for name in (s.subject, s.object):
            if name:
                mentions[name] = mentions.get(name, 0) + 1
    best_seq, best_count = 1, None
    for s in focal.storylines:
        count = mentions.get(s.subject, 0) + mentions.get(s.object, 0)
        if best_count is None or count < best_count:
            best_seq, best_count = s.sequence, count
    return best_seq


class RipplePipeline:
    """One pipeline instance per run; phases record every gateway call."""

    def __init__(
        self,
        gateway: Gateway,
        prompt_pack: "PromptPack | None" = None,
        dimensions: Sequence[str] = DEFAULT_SCORE_DIMENSIONS,
        retries: int = 1,
        length_cap: int = DEFAULT_LENGTH_CAP,
        model_id: str = "pipeline",
        temperature: float = 0.8,
        max_tokens: int = 1024,
    ):
        self.gateway = gateway
        self.prompts = prompt_pack or PromptPack()
        self.dimensions = tuple(dimensions)
        if len(self.dimensions) != 6:
            raise ValueError("interference scoring uses exactly six dimensions")
        self.retries = retries
        self.length_cap = length_cap
        self.model_id = model_id
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.calls: list[CallRecord] = []

    # -- plumbing ------------------------------------------------------------

    def _send(self, phase: str, prompt: str, images: Sequence[str] = ()) -> str:
        request = make_request(
            self.model_id,
            prompt,
            images=images,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            metadata={"phase": phase},
        )
        response = self.gateway.complete(request)
        self.calls.append(CallRecord(phase, request.content_hash(), response.text))
        return response.text

    def _ask(
        self,
        phase: str,
        prompt: str,
        parse: Callable[[str], object],
        images: Sequence[str] = (),
    ):
        """One call plus up to ``retries`` repair re-asks on structure errors."""
        attempt_prompt = prompt
        last: "StructureParseError | None" = None
        for attempt in range(self.retries + 1):
            text = self._send(phase, attempt_prompt, images=images)
            try:
                return parse(text)
            except StructureParseError as e:
                last = e
                attempt_prompt = prompt + REPAIR_SUFFIX
        raise PhaseError(phase, str(last), raw=last.raw if last else "")

    # -- phase 1: initiation ---------------------------------------------------

    def ripple_initiation(self, video) -> AnalysisQ:
        from ..gateway import frame_plan

        frames = tuple(getattr(video, "frame_paths", ()) or ())
        plan = frame_plan(getattr(video, "duration_s", 0.0), len(frames))
        images = tuple(frames[i] for i in plan.selected_indices)
        prompt = self.prompts.render("ripple_initiation", video_context=_video_context(video))
        return self._ask("ripple_initiation", prompt, xmlio.parse_analysis, images=images)

    # -- phase 2: focalization --------------------------------------------------

    def ripple_focalization(self, q: AnalysisQ) -> FocalSet:
        prompt = self.prompts.render("ripple_focalization", analysis=xmlio.analysis_to_text(q))
        return self._ask("ripple_focalization", prompt, xmlio.parse_focal)

    # -- phase 3: diffusion -------------------------------------------------------

    def _parse_extension(self, kind: str, focal: FocalSet, text: str, **fields) -> Extension:
        entity, storyline, environment = xmlio.parse_extension_triple(text)
        n = len(focal.storylines)
        storyline = StorylineS(storyline.action, storyline.subject, storyline.object, n + 1)
        novel = entity.identity not in focal.identities()
        return Extension(
            kind=kind,
            entity=entity,
            storyline=storyline,
            environment=environment,
            novel=novel,
            **fields,
        )

    def diffuse_sequential(self, focal: FocalSet, phase: str = "diffuse_sequential") -> Extension:
        n = len(focal.storylines)
        prompt = self.prompts.render(
            "diffuse_sequential",
            focal=xmlio.focal_to_text(focal),
            next_sequence=str(n + 1),
        )
        return self._ask(
            phase,
            prompt,
            lambda text: self._parse_extension(
                "sequential", focal, text, used_sequences=tuple(s.sequence for s in focal.storylines)
            ),
        )

    def diffuse_jumping(self, focal: FocalSet, k: int, first_hop: "Extension | None" = None) -> Extension:
        """k chained association steps; the first step may reuse a
        precomputed sequential extension (the chain's first application)."""
        if k < 2:
            raise ValueError("jumping association requires k >= 2")
        n = len(focal.storylines)
        hops: list[Extension] = []
        if first_hop is not None:
            hops.append(replace(first_hop, kind="jumping"))
        while len(hops) < k:
            if not hops:
                ext = self.diffuse_sequential(focal, phase="diffuse_jumping")
                hops.append(replace(ext, kind="jumping"))
                continue
            prompt = self.prompts.render(
                "diffuse_jumping",
                focal=xmlio.storylines_to_text(focal.storylines),
                previous=xmlio.extension_to_text(hops[-1]),
                next_sequence=str(n + 1),
            )
            ext = self._ask(
                "diffuse_jumping",
                prompt,
                lambda text: self._parse_extension("jumping", focal, text),
            )
            hops.append(ext)
        last = hops[-1]
        return replace(
            last,
            k=k,
            hops=tuple(hops),
            used_sequences=tuple(s.sequence for s in focal.storylines),
        )

    def diffuse_branching(self, focal: FocalSet, m: int) -> Extension:
        n = len(focal.storylines)
        if not 1 <= m <= n:
            raise ValueError(f"branching prefix m must be in 1..{n}, got {m}")
        prefix = focal.storylines[:m]
        prefix_names = {s.subject for s in prefix} | {s.object for s in prefix}
        entities = [e for e in focal.entities if e.identity in prefix_names] or list(focal.entities)
        prompt = self.prompts.render(
            "diffuse_branching",
            storylines=xmlio.storylines_to_text(prefix),
            entities="\n".join(f"- ({e.type}, {e.identity}, {e.attributes})" for e in entities),
            next_sequence=str(n + 1),
        )
        return self._ask(
            "diffuse_branching",
            prompt,
            lambda text: self._parse_extension(
                "branching", focal, text, m=m, used_sequences=tuple(s.sequence for s in prefix)
            ),
        )

    def diffuse_embedded(self, focal: FocalSet) -> Extension:
        def parse_nonempty(text: str) -> tuple[str, ...]:
            elements = xmlio.parse_elements(text)
            if not elements:
                raise StructureParseError("no cultural elements elicited", raw=text)
            return elements

        prompt = self.prompts.render("diffuse_embedded_elicit", focal=xmlio.focal_to_text(focal))
        try:
            elements = self._ask("diffuse_embedded", prompt, parse_nonempty)
        except PhaseError:
            ext = self.diffuse_sequential(focal, phase="diffuse_embedded")
            return replace(ext, kind="embedded", fallback=True)

        n = len(focal.storylines)
        prompt = self.prompts.render(
            "diffuse_embedded_associate",
            focal=xmlio.focal_to_text(focal),
            elements="\n".join(f"- {e}" for e in elements),
            next_sequence=str(n + 1),
        )
        return self._ask(
            "diffuse_embedded",
            prompt,
            lambda text: self._parse_extension(
                "embedded",
                focal,
                text,
                elements=elements,
                used_sequences=tuple(s.sequence for s in focal.storylines),
            ),
        )

    # -- phase 3b: candidate generation --------------------------------------------

    def generate_candidates(self, focal: FocalSet, extensions: Sequence[Extension]) -> list[CandidateComment]:
        kinds = tuple(e.kind for e in extensions)
        if kinds != ASSOCIATION_KINDS:
            raise ValueError(f"expected extensions in canonical order {ASSOCIATION_KINDS}, got {kinds}")

        def parse_nonempty(text: str) -> str:
            comment = xmlio.parse_comment(text)
            if not comment:
                raise StructureParseError("empty generated comment", raw=text)
            return comment

        candidates = []
        for ext in extensions:
            prompt = self.prompts.render(
                "generate_comment",
                focal=xmlio.focal_to_text(focal),
                kind=ext.kind,
                extension=xmlio.extension_to_text(ext),
            )
            text = self._ask("generate_candidates", prompt, parse_nonempty)
            candidates.append(CandidateComment(text=text, source_kind=ext.kind))
        return candidates

    # -- phase 4: interference ---------------------------------------------------

    def _interfere(
        self, focal: "FocalSet | None", candidates: Sequence[CandidateComment]
    ) -> tuple[list, list[float], int]:
        if len(candidates) < 2:
            raise ValueError("interference needs at least two candidates")
        listing = "\n".join(f"{i + 1}. {c.text}" for i, c in enumerate(candidates))
        dimension_tags = "\n".join(f"    <{d}>0</{d}>" for d in self.dimensions)
        prompt = self.prompts.render(
            "wave_interference",
            focal=xmlio.focal_to_text(focal) if focal else "(not available)",
            candidates=listing,
            dimensions=", ".join(self.dimensions),
            dimension_tags=dimension_tags,
        )
        table = self._ask(
            "wave_interference",
            prompt,
            lambda text: xmlio.parse_score_table(text, len(candidates), self.dimensions),
        )
        totals = [sum(v for _, v in row) for row in table]
        chosen = max(range(len(totals)), key=lambda i: (totals[i], -i))
        return table, totals, chosen

    def wave_interference(
        self, candidates: Sequence[CandidateComment], focal: "FocalSet | None" = None
    ) -> ScoredComment:
        table, totals, chosen = self._interfere(focal, candidates)
        winner = candidates[chosen]
        return ScoredComment(text=winner.text, source_kind=winner.source_kind, scores=table[chosen])

    # -- phase 5: imprint -----------------------------------------------------------

    def _imprint(self, best: ScoredComment) -> tuple[str, bool]:
        if not best.text:
            raise ValueError("cannot post-process an empty comment")

        def parse_bounded(text: str) -> str:
            final = xmlio.parse_final(text)
            if not final or len(final) > self.length_cap:
                raise StructureParseError(
                    f"rewrite empty or over {self.length_cap} chars", raw=text
                )
            return final

        prompt = self.prompts.render(
            "luminous_imprint", comment=best.text, max_chars=str(self.length_cap)
        )
        try:
            return self._ask("luminous_imprint", prompt, parse_bounded), False
        except PhaseError:
            return best.text, True

    def luminous_imprint(self, best: ScoredComment) -> str:
        text, _ = self._imprint(best)
        return text

    # -- full run ----------------------------------------------------------------

    def run(self, video, k: int = 2, m: "int | None" = None) -> RoTTrace:
        self.calls = []
        trace = RoTTrace(
            video_id=getattr(video, "video_id", ""),
            params={"k": k, "m": m, "retries": self.retries, "length_cap": self.length_cap},
        )
        trace.analysis = self.ripple_initiation(video)
        focal = self.ripple_focalization(trace.analysis)
        trace.focal = focal

        sequential = self.diffuse_sequential(focal)
        jumping = self.diffuse_jumping(focal, k, first_hop=sequential)
        branch_m = m if m is not None else pick_branch_index(focal)
        trace.params["m"] = branch_m
        branching = self.diffuse_branching(focal, branch_m)
        embedded = self.diffuse_embedded(focal)
        trace.extensions = [sequential, jumping, branching, embedded]
        for ext in trace.extensions:
            if not ext.novel:
                trace.flags.append(f"non_novel:{ext.kind}")
        if embedded.fallback:
            trace.flags.append("embedded_fallback")

        trace.candidates = self.generate_candidates(focal, trace.extensions)
        table, totals, chosen = self._interfere(focal, trace.candidates)
        trace.score_table = list(table)
        trace.totals = totals
        trace.chosen_index = chosen

        winner = trace.candidates[chosen]
        best = ScoredComment(text=winner.text, source_kind=winner.source_kind, scores=table[chosen])
        final, fell_back = self._imprint(best)
        if fell_back:
            trace.flags.append("imprint_fallback")
        trace.final_text = final
        trace.calls = list(self.calls)
        return trace


# --- spec-level entry points --------------------------------------------------


def ripple_initiation(video, gateway: Gateway, **kwargs) -> AnalysisQ:
    return RipplePipeline(gateway, **kwargs).ripple_initiation(video)

def ripple_focalization(q: AnalysisQ, gateway: Gateway, **kwargs) -> FocalSet:
    return RipplePipeline(gateway, **kwargs).ripple_focalization(q)

def diffuse_sequential(focal: FocalSet, gateway: Gateway, **kwargs) -> Extension:
    return RipplePipeline(gateway, **kwargs).diffuse_sequential(focal)

def diffuse_jumping(focal: FocalSet, k: int, gateway: Gateway, **kwargs) -> Extension:
    return RipplePipeline(gateway, **kwargs).diffuse_jumping(focal, k)

def diffuse_branching(focal: FocalSet, m: int, gateway: Gateway, **kwargs) -> Extension:
    return RipplePipeline(gateway, **kwargs).diffuse_branching(focal, m)

def diffuse_embedded(focal: FocalSet, gateway: Gateway, **kwargs) -> Extension:
    return RipplePipeline(gateway, **kwargs).diffuse_embedded(focal)

def generate_candidates(focal: FocalSet, extensions, gateway: Gateway, **kwargs) -> list[CandidateComment]:
    return RipplePipeline(gateway, **kwargs).generate_candidates(focal, extensions)

def wave_interference(candidates, gateway: Gateway, focal=None, **kwargs) -> ScoredComment:
    return RipplePipeline(gateway, **kwargs).wave_interference(candidates, focal=focal)

def luminous_imprint(best: ScoredComment, gateway: Gateway, **kwargs) -> str:
    return RipplePipeline(gateway, **kwargs).luminous_imprint(best)


def run_rot(video, params: "dict | None", gateway: Gateway, **kwargs) -> RoTTrace:
    """Execute all five phases in order and return the full trace."""
    params = dict(params or {})
    k = params.pop("k", 2)
    m = params.pop("m", None)
    retries = params.pop("retries", 1)
    pipeline = RipplePipeline(gateway, retries=retries, **params, **kwargs)
    return pipeline.run(video, k=k, m=m)
