"""Service configuration and the builders that turn it into live objects.

Secrets never live here: API tokens come from environment variables
(AMBIGUARD_EMBED_TOKEN, AMBIGUARD_LLM_TOKEN) read by the clients themselves.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .checkpoint import load_checkpoint_file
from .classifier import ClassifierModel
from .embed import Embedder, HashingEmbedder, RemoteEmbedder
from .lexical import (
    DEFAULT_COMMON_WORDS,
    DEFAULT_ENTITY_TYPES,
    EntityTypeLexicon,
    Lexicons,
    load_word_list,
)
from .rewrite import HttpLLMClient, MockRewriter, Rewriter, TemplateRewriter


@dataclass(frozen=True)
class ServiceConfig:
    checkpoint_path: str
    host: str = "127.0.0.1"
    port: int = 8000
    history_window: int = 5
    threshold: float | None = None
    embedder_kind: str = "hashing"
    embedder_url: str | None = None
    embedder_identity: str | None = None
    embedder_dim: int = 768
    rewriter_kind: str = "mock"
    mock_table_path: str | None = None
    llm_url: str | None = None
    llm_model: str | None = None
    request_timeout: float = 30.0
    max_inflight: int = 4
    entity_types_path: str | None = None
    common_words_path: str | None = None

    def __post_init__(self) -> None:
        if not 0 < self.port < 65536:
            raise ValueError(f"port out of range: {self.port}")
        if not 1 <= self.history_window <= 5:
            raise ValueError("history_window must be in [1, 5]")
        if self.threshold is not None and not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        if self.embedder_kind not in ("hashing", "remote"):
            raise ValueError(f"unknown embedder_kind {self.embedder_kind!r}")
        if self.embedder_kind == "remote" and not (self.embedder_url and self.embedder_identity):
            raise ValueError("remote embedder needs embedder_url and embedder_identity")
        if self.rewriter_kind not in ("mock", "llm"):
            raise ValueError(f"unknown rewriter_kind {self.rewriter_kind!r}")
        if self.rewriter_kind == "llm" and not (self.llm_url and self.llm_model):
            raise ValueError("llm rewriter needs llm_url and llm_model")
        if self.max_inflight < 1 or self.request_timeout <= 0:
            raise ValueError("max_inflight and request_timeout must be positive")


def config_from_file(path: str | Path) -> ServiceConfig:
    """JSON object whose keys are the ServiceConfig fields."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise ValueError("config file must contain a JSON object")
    known = {f.name for f in dataclasses.fields(ServiceConfig)}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    return ServiceConfig(**obj)


def build_lexicons(cfg: ServiceConfig) -> Lexicons:
    entity_types = (
        EntityTypeLexicon(load_word_list(cfg.entity_types_path))
        if cfg.entity_types_path
        else DEFAULT_ENTITY_TYPES
    )
    common = (
        load_word_list(cfg.common_words_path) if cfg.common_words_path else DEFAULT_COMMON_WORDS
    )
    return Lexicons(entity_types=entity_types, common_words=common)


def build_embedder(cfg: ServiceConfig) -> Embedder | None:
    """The embedder to pass into checkpoint loading; None lets a hashing
    checkpoint rebuild its own."""
    if cfg.embedder_kind == "remote":
        return RemoteEmbedder(
            url=cfg.embedder_url,
            identity=cfg.embedder_identity,
            dim=cfg.embedder_dim,
            timeout=cfg.request_timeout,
            max_inflight=cfg.max_inflight,
        )
    return None


def build_rewriter(cfg: ServiceConfig) -> Rewriter:
    if cfg.rewriter_kind == "llm":
        client = HttpLLMClient(
            url=cfg.llm_url,
            model=cfg.llm_model,
            timeout=cfg.request_timeout,
            max_inflight=cfg.max_inflight,
        )
        return TemplateRewriter(client)
    table = {}
    if cfg.mock_table_path:
        table = json.loads(Path(cfg.mock_table_path).read_text(encoding="utf-8"))
        if not isinstance(table, dict):
            raise ValueError("mock rewrite table must be a JSON object")
    return MockRewriter(table)


def load_model(cfg: ServiceConfig) -> ClassifierModel:
    model = load_checkpoint_file(cfg.checkpoint_path, build_embedder(cfg))
    if cfg.threshold is not None:
        model = dataclasses.replace(model, threshold=cfg.threshold)
    return model
