"""Query rewriting behind a pluggable interface, plus the LLM judge baseline.

Prompt templates are plain-text assets with named slots; slot presence is
validated when a template is constructed, never at render time. The HTTP
client speaks a chat-style JSON endpoint with bounded retries; the mock
rewriter is a lookup table with echo fallback so tests run with no network.
"""

from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol

import httpx

from .core import AmbiguityLabel, ChatTurn, Query

LLM_TOKEN_ENV = "AMBIGUARD_LLM_TOKEN"

REWRITE_HISTORY_WINDOW = 5


class LLMServiceError(RuntimeError):
    """LLM call failed after retries; `retryable` marks transient faults."""

    def __init__(self, message: str, *, retryable: bool) -> None:
        super().__init__(message)
        self.retryable = retryable


class RewriteError(RuntimeError):
    """The rewriter could not produce a rewrite; pipeline fails open."""


class DetectionParseError(RuntimeError):
    """The judge response carried neither verdict sentinel (abstention)."""


@dataclass(frozen=True)
class PromptTemplate:
    """Plain-text template; slots are literal ``{name}`` markers."""

    text: str
    required_slots: tuple[str, ...]

    def __post_init__(self) -> None:
        missing = [s for s in self.required_slots if f"{{{s}}}" not in self.text]
        if missing:
            raise ValueError(f"template is missing required slots: {missing}")

    def render(self, values: Mapping[str, str]) -> str:
        # str.replace, not str.format: template bodies may contain braces.
        out = self.text
        for slot in self.required_slots:
            out = out.replace(f"{{{slot}}}", values[slot])
        return out


@dataclass(frozen=True)
class RewriteContext:
    """What the rewriter may look at besides the query itself."""

    history: tuple[ChatTurn, ...] = ()
    snippets: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.history) > REWRITE_HISTORY_WINDOW:
            raise ValueError(
                f"rewrite context accepts at most {REWRITE_HISTORY_WINDOW} turns, "
                f"got {len(self.history)}"
            )


@dataclass(frozen=True)
class RewriteResult:
    rewritten: Query
    raw_response: str
    latency_ms: float

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency cannot be negative")


DEFAULT_REWRITE_TEMPLATE = PromptTemplate(
    text="""You rewrite conversational analytics questions so they stand alone.

Relevant snippets:
{snippets}

Chat history (most recent last):
{history}

Current query:
{query}

Rewrite the current query into a fully specified, self-contained question. \
Resolve coreferences and clarify any ambiguous pronouns using the chat \
history, correct typographical errors, and accurately preserve user-provided \
entity values exactly as written (names, ids, quoted strings). Reply with \
the rewritten query only.""",
    required_slots=("snippets", "history", "query"),
)

DEFAULT_DETECTION_TEMPLATE = PromptTemplate(
    text="""You are an expert linguist. You are provided with a question that a \
customer is asking to a conversational assistant, your task is to evaluate \
the clarity of question. Note that:

* If the current question is complete and customer's intent is clear, output "RESPONSE: CLEAR" on a separate line.

* If the current question is smart-talk or chit-chat, output "RESPONSE: CLEAR" on a separate line.

* If the current question is ambiguous or need clarification from the customer, output "RESPONSE: VAGUE" on a separate line.

* If the current question contains coreference and becomes clear after coreference resolution, output "RESPONSE: VAGUE" on a separate line.

* If the current question contains missing pronouns or conditions based on the conversation history, output "RESPONSE: VAGUE" on a separate line.

* Do not include any explanation.

Examples:

QUESTION: How can I connect the export service with my warehouse?
RESPONSE: CLEAR

QUESTION: What is the data retention policy in the audience store?
RESPONSE: CLEAR

QUESTION: When should I use the product?
RESPONSE: VAGUE

QUESTION: What is the license in this case?
RESPONSE: VAGUE

QUESTION: How many segments do I have?
RESPONSE: CLEAR

QUESTION: what does this page do?
RESPONSE: VAGUE

CURRENT QUESTION:{query}""",
    required_slots=("query",),
)


def load_template(path: str | Path, required_slots: tuple[str, ...]) -> PromptTemplate:
    return PromptTemplate(text=Path(path).read_text(encoding="utf-8"), required_slots=required_slots)


def _render_history(history: tuple[ChatTurn, ...]) -> str:
    if not history:
        return "(none)"
    return "\n".join(f"{turn.role.value}: {turn.text}" for turn in history)


def _render_snippets(snippets: tuple[str, ...]) -> str:
    if not snippets:
        return "(none)"
    return "\n".join(f"- {s}" for s in snippets)


def build_rewrite_prompt(
    q: Query, ctx: RewriteContext, template: PromptTemplate = DEFAULT_REWRITE_TEMPLATE
) -> str:
    return template.render(
        {
            "snippets": _render_snippets(ctx.snippets),
            "history": _render_history(ctx.history),
            "query": q.text,
        }
    )


class LLMClient(Protocol):
    def complete(self, prompt: str) -> str:
        """Return the model's text for one prompt."""
        ...


class HttpLLMClient:
    """Chat-style JSON endpoint with bounded exponential-backoff retries."""

    def __init__(
        self,
        url: str,
        model: str,
        timeout: float = 30.0,
        max_attempts: int = 3,
        backoff_base: float = 0.25,
        temperature: float = 0.0,
        max_inflight: int = 4,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        self.url = url
        self.model = model
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.temperature = temperature
        self._gate = threading.Semaphore(max_inflight)
        self._sleep = sleeper
        headers = {}
        token = os.environ.get(LLM_TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def complete(self, prompt: str) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                with self._gate:
                    response = self._client.post(self.url, json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = LLMServiceError(
                    f"LLM service returned {response.status_code}", retryable=True
                )
                continue
            if response.status_code != 200:
                raise LLMServiceError(
                    f"LLM service returned {response.status_code}", retryable=False
                )
            try:
                return str(response.json()["choices"][0]["message"]["content"])
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise LLMServiceError(f"malformed LLM response: {exc}", retryable=False) from exc
        raise LLMServiceError(
            f"LLM call failed after {self.max_attempts} attempts: {last_error}", retryable=True
        )

    def close(self) -> None:
        self._client.close()


class Rewriter(Protocol):
    def rewrite(self, q: Query, ctx: RewriteContext) -> RewriteResult:
        ...


class MockRewriter:
    """Lookup-table rewriter; unmapped queries echo back unchanged."""

    def __init__(self, table: Mapping[str, str] | None = None) -> None:
        self.table = dict(table or {})

    def rewrite(self, q: Query, ctx: RewriteContext) -> RewriteResult:
        start = time.perf_counter()
        text = self.table.get(q.text, q.text)
        return RewriteResult(
            rewritten=Query(text),
            raw_response=text,
            latency_ms=(time.perf_counter() - start) * 1000.0,
        )


class TemplateRewriter:
    """Renders the rewrite prompt and asks an LLM client for the rewrite."""

    def __init__(
        self, client: LLMClient, template: PromptTemplate = DEFAULT_REWRITE_TEMPLATE
    ) -> None:
        self.client = client
        self.template = template

    def rewrite(self, q: Query, ctx: RewriteContext) -> RewriteResult:
        prompt = build_rewrite_prompt(q, ctx, self.template)
        start = time.perf_counter()
        try:
            raw = self.client.complete(prompt)
        except LLMServiceError as exc:
            raise RewriteError(f"rewrite failed: {exc}") from exc
        latency_ms = (time.perf_counter() - start) * 1000.0
        text = raw.strip()
        if not text:
            raise RewriteError("rewrite failed: empty LLM response")
        return RewriteResult(rewritten=Query(text), raw_response=raw, latency_ms=latency_ms)


_VERDICT = re.compile(r"response:\s*(clear|vague)", re.IGNORECASE)


def parse_detection_response(raw: str) -> AmbiguityLabel:
    """First ``RESPONSE: CLEAR|VAGUE`` wins, case-insensitive."""
    match = _VERDICT.search(raw)
    if match is None:
        raise DetectionParseError(f"no verdict sentinel in response: {raw[:120]!r}")
    return AmbiguityLabel.CLEAR if match.group(1).lower() == "clear" else AmbiguityLabel.AMBIGUOUS


def llm_detect(
    q: Query, client: LLMClient, template: PromptTemplate = DEFAULT_DETECTION_TEMPLATE
) -> AmbiguityLabel:
    """LLM-judge ambiguity detection; raises DetectionParseError on abstention."""
    return parse_detection_response(client.complete(template.render({"query": q.text})))
