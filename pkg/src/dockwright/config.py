"""Runtime configuration.

Precedence: explicit overrides > environment variables > config file >
defaults. Only three knobs have environment variables, all prefixed
DOCKWRIGHT_: the remote embedder URL, the search backend URL, and the
container engine binary.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

ENV_EMBEDDER_URL = "DOCKWRIGHT_EMBEDDER_URL"
ENV_SEARCH_URL = "DOCKWRIGHT_SEARCH_URL"
ENV_ENGINE = "DOCKWRIGHT_ENGINE"

DEFAULT_ALLOWLIST = (
    "stackoverflow.com",
    "forums.docker.com",
    "github.com/*/issues",
    "serverfault.com",
    "superuser.com",
)

DEFAULT_DAEMON_ERROR_PATTERNS = (
    r"error response from daemon",
    r"cannot connect to the docker daemon",
    r"error during connect",
    r"daemon.*internal server error",
    r"grpc: the connection is unavailable",
)


@dataclass
class Config:
    timeout_limit: float = 1800.0
    tail_lines: int = 15
    embed_dim: int = 256
    ngram_min: int = 3
    ngram_max: int = 5
    include_word_unigrams: bool = True
    embedder_kind: str = "hashed-ngram"
    embedder_url: str | None = None
    search_url: str | None = None
    search_allowlist: tuple[str, ...] = DEFAULT_ALLOWLIST
    search_max_keywords: int = 8
    engine: str = "docker"
    engine_flags: tuple[str, ...] = ()
    daemon_error_patterns: tuple[str, ...] = DEFAULT_DAEMON_ERROR_PATTERNS
    trivial_kinds: tuple[str, ...] = ("COPY", "ADD")
    parallelism: int = 2
    port: int = 7341
    min_cluster_size: int = 3
    min_samples: int = 3
    meta: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "Config":
        """Build a Config from an optional JSON file, env vars, and overrides."""
        values: dict = {}
        if path is not None:
            try:
                raw = Path(path).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config file {path}: {exc}") from exc
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"config file {path} must hold a JSON object")
            known = {f.name for f in dataclasses.fields(cls)}
            for key, val in data.items():
                if key not in known:
                    raise ConfigError(f"unknown config key {key!r} in {path}")
                if isinstance(val, list):
                    val = tuple(val)
                values[key] = val
        if os.environ.get(ENV_EMBEDDER_URL):
            values["embedder_url"] = os.environ[ENV_EMBEDDER_URL]
        if os.environ.get(ENV_SEARCH_URL):
            values["search_url"] = os.environ[ENV_SEARCH_URL]
        if os.environ.get(ENV_ENGINE):
            values["engine"] = os.environ[ENV_ENGINE]
        for key, val in overrides.items():
            if val is not None:
                values[key] = val
        cfg = cls(**values)
        if cfg.timeout_limit <= 0:
            raise ConfigError("timeout_limit must be positive")
        if cfg.tail_lines < 1:
            raise ConfigError("tail_lines must be >= 1")
        if cfg.embed_dim < 1:
            raise ConfigError("embed_dim must be >= 1")
        if cfg.ngram_min > cfg.ngram_max:
            raise ConfigError("ngram_min must not exceed ngram_max")
        return cfg
