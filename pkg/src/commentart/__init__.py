"""Evaluation harness for creative video comments.

Builds discriminative and generative tasks from video-comment records, runs
models (including the staged ripple reasoning pipeline) against any
chat-completion endpoint, scores outputs with a metric suite and an
LLM judge, and hosts the human-annotation workflow.
"""

from .dataset import (
    Comment,
    Dataset,
    VideoRecord,
    load_dataset,
    save_dataset,
    split_dataset,
    validate_record,
)
from .gateway import (
    EndpointConfig,
    FramePlan,
    Gateway,
    ModelRequest,
    ModelResponse,
    ReplayTransport,
    RetryPolicy,
    ScriptedTransport,
    ScriptStep,
    frame_plan,
    make_request,
)
from .judge import CriterionScores, extract_entities, judge_creation, judge_explanation
from .prompts import PromptPack
from .taxonomy import ArtTag, Taxonomy, default_taxonomy, parse_tag
from .tasks import (
    TaskConfig,
    TaskInstance,
    build_classification,
    build_creation,
    build_explanation,
    build_ranking,
    build_selection,
    build_tasks,
    select_few_shot,
)

__version__ = "0.1.0"
