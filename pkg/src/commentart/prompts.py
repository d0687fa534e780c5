"""Prompt pack: one plain-text template per phase/task, overridable by directory."""

from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path
from string import Template

TEMPLATE_NAMES = (
    "ripple_initiation",
    "ripple_focalization",
    "diffuse_sequential",
    "diffuse_jumping",
    "diffuse_branching",
    "diffuse_embedded_elicit",
    "diffuse_embedded_associate",
    "generate_comment",
    "wave_interference",
    "luminous_imprint",
    "task_selection",
    "task_ranking",
    "task_classification",
    "task_explanation",
    "task_creation",
    "judge_explanation",
    "judge_creation",
    "extract_entities",
)

REPAIR_SUFFIX = (
    "\n\nYour previous reply could not be parsed. Reply again with exactly the "
    "required structure and nothing else."
)


class PromptPack:
    """Named templates with ``$placeholder`` substitution.

    Templates ship inside the package; an override directory replaces any
    template that has a matching ``<name>.txt`` file.
    """

    def __init__(self, override_dir: "str | Path | None" = None):
        self.templates: dict[str, str] = {}
        base = resources.files("commentart").joinpath("prompts")
        for name in TEMPLATE_NAMES:
            self.templates[name] = base.joinpath(f"{name}.txt").read_text("utf-8")
        if override_dir is not None:
            for path in sorted(Path(override_dir).glob("*.txt")):
                self.templates[path.stem] = path.read_text("utf-8")

    def render(self, name: str, **values: str) -> str:
        if name not in self.templates:
            raise KeyError(f"unknown prompt template {name!r}")
        return Template(self.templates[name]).safe_substitute(**values)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.templates):
            h.update(name.encode("utf-8"))
            h.update(b"\x00")
            h.update(self.templates[name].encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()
