"""Comment-art tag taxonomy: five dimensions, 25 subcategories, video categories.

The taxonomy is a closed table shipped with the package
(``data/taxonomy.json``). Tags are stored in canonical English subcategory
names; localized or legacy labels resolve through the ``aliases`` map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

DIMENSIONS = ("RT", "DA", "WT", "IV", "ER")


class UnknownTagError(ValueError):
    """A tag string that does not resolve against the taxonomy."""


@dataclass(frozen=True)
class ArtTag:
    """One comment-art label: a dimension code and its subcategory."""

    dimension: str
    subcategory: str

    def __str__(self) -> str:
        return f"{self.dimension}/{self.subcategory}"


class Taxonomy:
    """Closed tag table plus the closed video-category list."""

    def __init__(
        self,
        version: str,
        dimensions: dict[str, list[str]],
        video_categories: list[str],
        aliases: dict[str, str] | None = None,
    ):
        self.version = version
        self.dimensions = {dim: tuple(subs) for dim, subs in dimensions.items()}
        self.video_categories = tuple(video_categories)
        self._category_set = set(video_categories)
        self._aliases = {k.casefold(): v for k, v in (aliases or {}).items()}
        self._by_subcategory: dict[str, ArtTag] = {}
        for dim, subs in self.dimensions.items():
            for sub in subs:
                self._by_subcategory[sub.casefold()] = ArtTag(dim, sub)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Taxonomy":
        """Load a taxonomy config; defaults to the table shipped in-package."""
        if path is None:
            raw = resources.files("commentart").joinpath("data/taxonomy.json").read_text("utf-8")
        else:
            raw = Path(path).read_text("utf-8")
        data = json.loads(raw)
        dimensions = {
            dim: list(entry["subcategories"]) for dim, entry in data["dimensions"].items()
        }
        return cls(
            version=data.get("version", "unversioned"),
            dimensions=dimensions,
            video_categories=list(data.get("video_categories", [])),
            aliases=data.get("aliases"),
        )

    def parse_tag(self, text: str) -> ArtTag:
        """Resolve a tag string case-insensitively, through aliases if needed."""
        key = text.strip().casefold()
        if key in self._aliases:
            key = self._aliases[key].casefold()
        tag = self._by_subcategory.get(key)
        if tag is None:
            raise UnknownTagError(f"unknown tag: {text!r}")
        return tag

    def is_valid(self, dimension: str, subcategory: str) -> bool:
        tag = self._by_subcategory.get(subcategory.strip().casefold())
        return tag is not None and tag.dimension == dimension

    def is_category(self, category: str) -> bool:
        return category in self._category_set

    @property
    def subcategory_count(self) -> int:
        return sum(len(subs) for subs in self.dimensions.values())


_DEFAULT: Taxonomy | None = None


def default_taxonomy() -> Taxonomy:
    """The packaged taxonomy, loaded once."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Taxonomy.load()
    return _DEFAULT


def parse_tag(text: str, taxonomy: Taxonomy | None = None) -> ArtTag:
    """Resolve a tag string against a taxonomy (packaged one by default)."""
    return (taxonomy or default_taxonomy()).parse_tag(text)
