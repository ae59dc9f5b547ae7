"""Ambiguity-guided routing: classify, then rewrite only when ambiguous.

Three framework modes share one code path: no_rewrite never touches the
rewriter, always_rewrite skips classification, guided does both. Rewriter
failures degrade to passing the original query through; classification
failures in guided mode are surfaced, never silently bypassed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

from .classifier import ClassifierModel, classify
from .core import AmbiguityLabel, AmbiguityVerdict, Conversation, DatasetRecord, Query, truncate_history
from .lexical import Lexicons
from .rewrite import REWRITE_HISTORY_WINDOW, RewriteContext, Rewriter

Detector = Callable[[Query], AmbiguityVerdict]


class FrameworkMode(str, Enum):
    NO_REWRITE = "no_rewrite"
    ALWAYS_REWRITE = "always_rewrite"
    GUIDED = "guided"


@dataclass(frozen=True)
class RoutingRecord:
    """Outcome of routing one query through a framework mode."""

    mode: FrameworkMode
    original: Query
    routed: Query
    rewrite_invoked: bool
    verdict: AmbiguityVerdict | None = None
    degraded: bool = False
    timings: Mapping[str, float] = field(default_factory=dict)
    error: str | None = None

    def __post_init__(self) -> None:
        if self.error is not None:
            return
        if self.mode is FrameworkMode.NO_REWRITE:
            if self.rewrite_invoked or self.routed.text != self.original.text:
                raise ValueError("no_rewrite must pass the query through untouched")
            if self.verdict is not None:
                raise ValueError("no_rewrite carries no verdict")
        elif self.mode is FrameworkMode.ALWAYS_REWRITE:
            if not self.rewrite_invoked:
                raise ValueError("always_rewrite must invoke the rewriter")
            if self.verdict is not None:
                raise ValueError("always_rewrite carries no verdict")
        else:
            if self.verdict is None:
                raise ValueError("guided mode requires a verdict")
            if self.rewrite_invoked != (self.verdict.label is AmbiguityLabel.AMBIGUOUS):
                raise ValueError("guided mode rewrites exactly the ambiguous queries")


def make_detector(model: ClassifierModel, lexicons: Lexicons = Lexicons()) -> Detector:
    """Adapt a trained model (plus lexicons) to the plain detector callable."""
    return lambda q: classify(model, q, lexicons)


def _as_detector(model, lexicons: Lexicons) -> Detector:
    if isinstance(model, ClassifierModel):
        return make_detector(model, lexicons)
    if callable(model):
        return model
    raise TypeError("guided mode needs a ClassifierModel or a detector callable")


def _attempt_rewrite(
    rewriter: Rewriter, conv: Conversation, snippets: tuple[str, ...], window: int
) -> tuple[Query, bool, float]:
    """Returns (routed, degraded, latency_ms); any rewriter fault fails open."""
    truncated = truncate_history(conv, window)
    ctx = RewriteContext(history=truncated.turns, snippets=snippets)
    start = time.perf_counter()
    try:
        result = rewriter.rewrite(conv.current, ctx)
    except Exception:
        return conv.current, True, (time.perf_counter() - start) * 1000.0
    return result.rewritten, False, result.latency_ms


def process(
    conv: Conversation,
    mode: FrameworkMode,
    model: ClassifierModel | Detector | None = None,
    rewriter: Rewriter | None = None,
    lexicons: Lexicons = Lexicons(),
    snippets: tuple[str, ...] = (),
    history_window: int = REWRITE_HISTORY_WINDOW,
) -> RoutingRecord:
    """Route one conversation through the given framework mode.

    Classification always sees the untruncated current query; the history
    window (at most 5 turns) applies only to the rewrite context. Embedder
    failures in guided mode propagate to the caller.
    """
    if not 1 <= history_window <= REWRITE_HISTORY_WINDOW:
        raise ValueError(f"history_window must be in [1, {REWRITE_HISTORY_WINDOW}]")
    total_start = time.perf_counter()
    timings: dict[str, float] = {"classify_ms": 0.0, "rewrite_ms": 0.0}

    if mode is FrameworkMode.NO_REWRITE:
        timings["total_ms"] = (time.perf_counter() - total_start) * 1000.0
        return RoutingRecord(
            mode=mode, original=conv.current, routed=conv.current,
            rewrite_invoked=False, timings=timings,
        )

    if mode is FrameworkMode.ALWAYS_REWRITE:
        if rewriter is None:
            raise ValueError("always_rewrite mode requires a rewriter")
        routed, degraded, rewrite_ms = _attempt_rewrite(rewriter, conv, snippets, history_window)
        timings["rewrite_ms"] = rewrite_ms
        timings["total_ms"] = (time.perf_counter() - total_start) * 1000.0
        return RoutingRecord(
            mode=mode, original=conv.current, routed=routed,
            rewrite_invoked=True, degraded=degraded, timings=timings,
        )

    detector = _as_detector(model, lexicons)
    classify_start = time.perf_counter()
    verdict = detector(conv.current)
    timings["classify_ms"] = (time.perf_counter() - classify_start) * 1000.0

    if verdict.label is AmbiguityLabel.AMBIGUOUS:
        if rewriter is None:
            raise ValueError("guided mode requires a rewriter for ambiguous queries")
        routed, degraded, rewrite_ms = _attempt_rewrite(rewriter, conv, snippets, history_window)
        timings["rewrite_ms"] = rewrite_ms
    else:
        routed, degraded = conv.current, False
    timings["total_ms"] = (time.perf_counter() - total_start) * 1000.0
    return RoutingRecord(
        mode=mode, original=conv.current, routed=routed,
        rewrite_invoked=verdict.label is AmbiguityLabel.AMBIGUOUS,
        verdict=verdict, degraded=degraded, timings=timings,
    )


def process_batch(
    records: Sequence[DatasetRecord],
    mode: FrameworkMode,
    model: ClassifierModel | Detector | None = None,
    rewriter: Rewriter | None = None,
    lexicons: Lexicons = Lexicons(),
) -> list[RoutingRecord]:
    """Order-preserving batch routing with per-record fault isolation."""
    out: list[RoutingRecord] = []
    for record in records:
        conv = Conversation(turns=record.history, current=record.query)
        try:
            out.append(process(conv, mode, model, rewriter, lexicons))
        except Exception as exc:
            out.append(
                RoutingRecord(
                    mode=mode, original=record.query, routed=record.query,
                    rewrite_invoked=False, degraded=True, error=str(exc),
                )
            )
    return out


def routing_record_to_obj(record: RoutingRecord) -> dict:
    """JSON-ready view used by the service and CLI."""
    verdict = None
    if record.verdict is not None:
        verdict = {
            "label": record.verdict.label.value,
            "type": record.verdict.ambiguity_type.value,
            "score": record.verdict.score,
            "source": record.verdict.source.value,
        }
    return {
        "mode": record.mode.value,
        "original": record.original.text,
        "routed": record.routed.text,
        "rewrite_invoked": record.rewrite_invoked,
        "verdict": verdict,
        "degraded": record.degraded,
        "timings": dict(record.timings),
        "error": record.error,
    }
