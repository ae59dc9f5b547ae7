"""HTTP service over the routing pipeline.

Contract: POST /classify and /process, GET /healthz. Malformed bodies are
400 (not the framework default 422); an unreachable embedder in guided mode
is 503; a rewriter failure is a 200 with degraded=true. The model is loaded
once and shared immutably across requests.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .classifier import ClassifierModel, classify
from .config import ServiceConfig, build_lexicons, build_rewriter, load_model
from .core import ChatTurn, Conversation, Query, Role
from .embed import EmbedderError
from .features import extract
from .lexical import Lexicons, mask_entities
from .pipeline import FrameworkMode, process, routing_record_to_obj
from .rewrite import REWRITE_HISTORY_WINDOW, Rewriter


@dataclass
class ServiceState:
    model: ClassifierModel
    rewriter: Rewriter
    lexicons: Lexicons = dataclass_field(default_factory=Lexicons)
    history_window: int = REWRITE_HISTORY_WINDOW


_LABELS = ["clear", "ambiguous"]
_TYPES = ["pragmatic", "syntactic", "lexical", "unknown"]
_SOURCES = ["model", "lexical_override"]

_VERDICT_SCHEMA = {
    "type": "object",
    "required": ["label", "type", "score", "source"],
    "additionalProperties": False,
    "properties": {
        "label": {"enum": _LABELS},
        "type": {"enum": _TYPES},
        "score": {"type": "number", "minimum": 0, "maximum": 1},
        "source": {"enum": _SOURCES},
    },
}

# Published response contract, one JSON Schema per endpoint outcome.
RESPONSE_SCHEMAS = {
    "classify": {
        "type": "object",
        "required": ["label", "type", "score", "source", "masked", "features"],
        "additionalProperties": False,
        "properties": {
            "label": {"enum": _LABELS},
            "type": {"enum": _TYPES},
            "score": {"type": "number", "minimum": 0, "maximum": 1},
            "source": {"enum": _SOURCES},
            "masked": {"type": "string"},
            "features": {
                "type": "object",
                "required": ["query_length", "referential_count", "readability"],
                "additionalProperties": False,
                "properties": {
                    "query_length": {"type": "integer", "minimum": 1},
                    "referential_count": {"type": "integer", "minimum": 0},
                    "readability": {"type": "number"},
                },
            },
        },
    },
    "process": {
        "type": "object",
        "required": [
            "mode", "original", "routed", "rewrite_invoked",
            "verdict", "degraded", "timings", "error",
        ],
        "additionalProperties": False,
        "properties": {
            "mode": {"enum": ["no_rewrite", "always_rewrite", "guided"]},
            "original": {"type": "string"},
            "routed": {"type": "string"},
            "rewrite_invoked": {"type": "boolean"},
            "verdict": {"oneOf": [{"type": "null"}, _VERDICT_SCHEMA]},
            "degraded": {"type": "boolean"},
            "timings": {
                "type": "object",
                "additionalProperties": {"type": "number", "minimum": 0},
            },
            "error": {"type": ["string", "null"]},
        },
    },
    "healthz": {
        "type": "object",
        "required": ["status", "model_version"],
        "additionalProperties": False,
        "properties": {
            "status": {"const": "ok"},
            "model_version": {"type": "string"},
        },
    },
    "error": {
        "type": "object",
        "required": ["error"],
        "additionalProperties": False,
        "properties": {"error": {"type": "string"}},
    },
}


class StateHolder:
    """Mutable slot so /healthz can report 503 until the model is loaded."""

    def __init__(self, state: ServiceState | None = None) -> None:
        self.state = state


class TurnBody(BaseModel):
    role: Literal["user", "assistant"]
    text: str


class ClassifyBody(BaseModel):
    query: str = Field(min_length=1)
    history: list[TurnBody] | None = None


class ProcessBody(ClassifyBody):
    mode: Literal["no_rewrite", "always_rewrite", "guided"]


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _turns(body_history: list[TurnBody] | None) -> tuple[ChatTurn, ...]:
    if not body_history:
        return ()
    return tuple(ChatTurn(role=Role(t.role), text=t.text) for t in body_history)


def create_app(state: StateHolder | ServiceState) -> FastAPI:
    holder = StateHolder(state) if isinstance(state, ServiceState) else state
    app = FastAPI(title="ambiguard", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def _validation_to_400(request: Request, exc: RequestValidationError):
        return _error(400, "malformed request body")

    @app.get("/healthz")
    def healthz():
        if holder.state is None:
            return _error(503, "model not loaded")
        return {"status": "ok", "model_version": holder.state.model.version}

    @app.post("/classify")
    def classify_endpoint(body: ClassifyBody):
        if holder.state is None:
            return _error(503, "model not loaded")
        st = holder.state
        try:
            q = Query(body.query)
        except ValueError as exc:
            return _error(400, str(exc))
        try:
            verdict = classify(st.model, q, st.lexicons)
        except EmbedderError as exc:
            return _error(503 if exc.retryable else 500, str(exc))
        fv = extract(q)
        return {
            "label": verdict.label.value,
            "type": verdict.ambiguity_type.value,
            "score": verdict.score,
            "source": verdict.source.value,
            "masked": mask_entities(q, st.lexicons.common_words).text,
            "features": {
                "query_length": fv.f_ql,
                "referential_count": fv.f_rc,
                "readability": fv.f_cli,
            },
        }

    @app.post("/process")
    def process_endpoint(body: ProcessBody):
        if holder.state is None:
            return _error(503, "model not loaded")
        st = holder.state
        try:
            conv = Conversation(turns=_turns(body.history), current=Query(body.query))
        except ValueError as exc:
            return _error(400, str(exc))
        try:
            record = process(
                conv,
                FrameworkMode(body.mode),
                model=st.model,
                rewriter=st.rewriter,
                lexicons=st.lexicons,
                history_window=st.history_window,
            )
        except EmbedderError as exc:
            return _error(503 if exc.retryable else 500, str(exc))
        return routing_record_to_obj(record)

    return app


def state_from_config(cfg: ServiceConfig) -> ServiceState:
    return ServiceState(
        model=load_model(cfg),
        rewriter=build_rewriter(cfg),
        lexicons=build_lexicons(cfg),
        history_window=cfg.history_window,
    )


def serve(cfg: ServiceConfig) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    holder = StateHolder()
    app = create_app(holder)
    holder.state = state_from_config(cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
