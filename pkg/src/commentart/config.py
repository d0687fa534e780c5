"""Harness configuration: one structured file for endpoints, seeds, task
configs, prompt pack, and concurrency. Credentials come from env vars only."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .gateway import EndpointConfig
from .tasks import TaskConfig


@dataclass
class HarnessConfig:
    endpoints: dict[str, EndpointConfig] = field(default_factory=dict)
    seed: int = 0
    task_configs: list[TaskConfig] = field(default_factory=list)
    prompt_pack_dir: "str | None" = None
    max_in_flight: int = 4
    judge_endpoint: "str | None" = None
    embedding_endpoint: "str | None" = None

    def endpoint(self, name: str) -> EndpointConfig:
        if name not in self.endpoints:
            raise KeyError(f"endpoint {name!r} not configured (have {sorted(self.endpoints)})")
        return self.endpoints[name]


def _endpoint_from_dict(name: str, doc: dict) -> EndpointConfig:
    return EndpointConfig(
        name=name,
        base_url=doc["base_url"],
        model_id=doc["model_id"],
        credential_env=doc.get("credential_env", ""),
        dialect=doc.get("dialect", "openai"),
        rpm_cap=doc.get("rpm_cap"),
        temperature_discriminative=doc.get("temperature_discriminative", 0.0),
        temperature_generative=doc.get("temperature_generative", 0.8),
        max_tokens=doc.get("max_tokens", 1024),
        timeout_s=doc.get("timeout_s", 120.0),
    )


def _task_config_from_dict(doc: dict) -> TaskConfig:
    return TaskConfig(
        kind=doc["kind"],
        high_count=doc.get("high_count", doc.get("m", 0)),
        ordinary_count=doc.get("ordinary_count", doc.get("n", 0)),
        seed=doc.get("seed", 0),
    )


def load_config(path: str | Path) -> HarnessConfig:
    doc = yaml.safe_load(Path(path).read_text("utf-8")) or {}
    endpoints = {
        name: _endpoint_from_dict(name, entry)
        for name, entry in (doc.get("endpoints") or {}).items()
    }
    return HarnessConfig(
        endpoints=endpoints,
        seed=doc.get("seed", 0),
        task_configs=[_task_config_from_dict(t) for t in doc.get("task_configs", [])],
        prompt_pack_dir=doc.get("prompt_pack_dir"),
        max_in_flight=doc.get("max_in_flight", 4),
        judge_endpoint=doc.get("judge_endpoint"),
        embedding_endpoint=doc.get("embedding_endpoint"),
    )
