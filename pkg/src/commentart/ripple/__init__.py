"""Ripple reasoning pipeline: staged association, scoring, and rewrite."""

from .pipeline import (
    PhaseError,
    RipplePipeline,
    diffuse_branching,
    diffuse_embedded,
    diffuse_jumping,
    diffuse_sequential,
    generate_candidates,
    luminous_imprint,
    pick_branch_index,
    ripple_focalization,
    ripple_initiation,
    run_rot,
    wave_interference,
)
from .types import (
    ASSOCIATION_KINDS,
    DEFAULT_SCORE_DIMENSIONS,
    AnalysisQ,
    CallRecord,
    CandidateComment,
    EntityX,
    EnvironmentE,
    Extension,
    FocalSet,
    RoTTrace,
    ScoredComment,
    StorylineS,
)
from .xmlio import StructureParseError

__all__ = [
    "ASSOCIATION_KINDS",
    "DEFAULT_SCORE_DIMENSIONS",
    "AnalysisQ",
    "CallRecord",
    "CandidateComment",
    "EntityX",
    "EnvironmentE",
    "Extension",
    "FocalSet",
    "PhaseError",
    "RipplePipeline",
    "RoTTrace",
    "ScoredComment",
    "StorylineS",
    "StructureParseError",
    "diffuse_branching",
    "diffuse_embedded",
    "diffuse_jumping",
    "diffuse_sequential",
    "generate_candidates",
    "luminous_imprint",
    "pick_branch_index",
    "ripple_focalization",
    "ripple_initiation",
    "run_rot",
    "wave_interference",
]
