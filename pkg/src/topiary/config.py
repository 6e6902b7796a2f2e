"""Run configuration: defaults, config-file loading, flag overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .assignment import BM25Params
from .embedding import TrainConfig
from .taxonomy import BuildConfig

CACHE_ENV_VAR = "TOPIARY_CACHE_DIR"


@dataclass
class RunConfig:
    """Everything one pipeline run needs: paths, mining, build and logging settings.

    Values resolve in order: built-in default < config file < command-line
    flag. The cache directory additionally honors the TOPIARY_CACHE_DIR
    environment variable (flag still wins).
    """

    corpus: str | None = None
    term_list: str | None = None
    corpus_format: str = "text"
    output_dir: str = "out"
    cache_dir: str | None = None
    mine_min_count: int = 10
    mine_max_ngram: int = 3
    top_n: int = 8
    workers: int = 0  # 0 = one worker per processor
    log_level: str = "INFO"
    build: BuildConfig = field(default_factory=BuildConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        build_data = data.pop("build", {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        build = _build_config_from_dict(build_data)
        return cls(**data, build=build)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)

    def resolved_cache_dir(self, cli_value: str | None = None) -> Path:
        if cli_value:
            return Path(cli_value)
        env = os.environ.get(CACHE_ENV_VAR)
        if env:
            return Path(env)
        if self.cache_dir:
            return Path(self.cache_dir)
        return Path(self.output_dir) / "cache"

    def validate_paths(self) -> None:
        if self.corpus is None:
            raise ValueError("no corpus path configured")
        if not Path(self.corpus).is_file():
            raise ValueError(f"corpus file not found: {self.corpus}")
        if self.term_list is not None and not Path(self.term_list).is_file():
            raise ValueError(f"term list file not found: {self.term_list}")


def _sub_config_from_dict(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {where} config keys: {sorted(unknown)}")
    return cls(**data)


def _build_config_from_dict(data: dict) -> BuildConfig:
    if not isinstance(data, dict):
        raise ValueError("'build' must be a JSON object")
    data = dict(data)
    global_embedding = _sub_config_from_dict(
        TrainConfig, data.pop("global_embedding", {}), "build.global_embedding"
    )
    local_data = data.pop("local_embedding", {})
    local_data.setdefault("min_count", 2)
    local_embedding = _sub_config_from_dict(TrainConfig, local_data, "build.local_embedding")
    bm25 = _sub_config_from_dict(BM25Params, data.pop("bm25", {}), "build.bm25")
    known = {f.name for f in fields(BuildConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown build config keys: {sorted(unknown)}")
    return BuildConfig(
        **data,
        global_embedding=global_embedding,
        local_embedding=local_embedding,
        bm25=bm25,
    )
