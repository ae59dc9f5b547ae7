"""Shared domain types: queries, conversations, labels, and dataset records.

Everything here is an immutable value object, safe to share across threads.
Dataset files are line-delimited JSON; see ``parse_dataset``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Union


class AmbiguityLabel(str, Enum):
    CLEAR = "clear"
    AMBIGUOUS = "ambiguous"


class AmbiguityType(str, Enum):
    """Taxonomy of ambiguity kinds.

    The classifier only ever emits UNKNOWN; LEXICAL is assigned exclusively
    by the rule-based override in :mod:`ambiguard.lexical`.
    """

    PRAGMATIC = "pragmatic"
    SYNTACTIC = "syntactic"
    LEXICAL = "lexical"
    UNKNOWN = "unknown"


class VerdictSource(str, Enum):
    MODEL = "model"
    LEXICAL_OVERRIDE = "lexical_override"


class Role(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"


class DatasetError(ValueError):
    """A dataset stream violates the record format."""


@dataclass(frozen=True)
class Query:
    """A single user query. Text must be non-empty after trimming."""

    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError("query text must be a non-empty string")


@dataclass(frozen=True)
class ChatTurn:
    role: Role
    text: str


@dataclass(frozen=True)
class Conversation:
    """Chronological chat history (oldest first) plus the current query."""

    turns: tuple[ChatTurn, ...]
    current: Query


@dataclass(frozen=True)
class AmbiguityVerdict:
    """Final decision for one query.

    ``score`` is always the model's ambiguous-class probability, even when
    the lexical rule overrode the label.
    """

    label: AmbiguityLabel
    ambiguity_type: AmbiguityType
    score: float
    source: VerdictSource

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if self.source is VerdictSource.LEXICAL_OVERRIDE:
            if self.label is not AmbiguityLabel.AMBIGUOUS:
                raise ValueError("lexical override implies an ambiguous label")
            if self.ambiguity_type is not AmbiguityType.LEXICAL:
                raise ValueError("lexical override implies lexical type")


@dataclass(frozen=True)
class DatasetRecord:
    """One labeled (or rewrite-evaluation) example from a dataset file."""

    id: str
    query: Query
    label: AmbiguityLabel | None = None
    history: tuple[ChatTurn, ...] = ()
    golden_rewrite: str | None = None


def _record_from_obj(obj: dict, line_no: int) -> DatasetRecord:
    if not isinstance(obj, dict):
        raise DatasetError(f"line {line_no}: expected an object, got {type(obj).__name__}")
    try:
        rid = obj["id"]
        text = obj["query"]
    except KeyError as exc:
        raise DatasetError(f"line {line_no}: missing required field {exc}") from None
    if not isinstance(rid, str) or not rid:
        raise DatasetError(f"line {line_no}: id must be a non-empty string")
    try:
        query = Query(text)
    except ValueError as exc:
        raise DatasetError(f"line {line_no}: record {rid!r}: {exc}") from None

    label = None
    if obj.get("label") is not None:
        try:
            label = AmbiguityLabel(obj["label"])
        except ValueError:
            raise DatasetError(
                f"line {line_no}: record {rid!r}: unknown label {obj['label']!r}"
            ) from None

    turns = []
    for turn in obj.get("history") or ():
        try:
            turns.append(ChatTurn(role=Role(turn["role"]), text=str(turn["text"])))
        except (KeyError, TypeError, ValueError):
            raise DatasetError(f"line {line_no}: record {rid!r}: malformed history turn") from None

    golden = obj.get("golden_rewrite")
    if golden is not None and not isinstance(golden, str):
        raise DatasetError(f"line {line_no}: record {rid!r}: golden_rewrite must be a string")

    return DatasetRecord(id=rid, query=query, label=label, history=tuple(turns), golden_rewrite=golden)


def parse_dataset(stream: Union[IO[bytes], IO[str], Iterable[Union[str, bytes]]]) -> list[DatasetRecord]:
    """Parse a line-delimited JSON dataset into records, preserving file order.

    Raises :class:`DatasetError` naming the offending line for malformed JSON,
    unknown labels or roles, empty query text, and duplicate ids.
    """
    records: list[DatasetRecord] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                raise DatasetError(f"line {line_no}: not valid UTF-8") from None
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"line {line_no}: malformed JSON ({exc.msg})") from None
        record = _record_from_obj(obj, line_no)
        if record.id in seen:
            raise DatasetError(f"line {line_no}: duplicate id {record.id!r}")
        seen.add(record.id)
        records.append(record)
    return records


def record_to_obj(record: DatasetRecord) -> dict:
    obj: dict = {"id": record.id, "query": record.query.text}
    if record.label is not None:
        obj["label"] = record.label.value
    if record.history:
        obj["history"] = [{"role": t.role.value, "text": t.text} for t in record.history]
    if record.golden_rewrite is not None:
        obj["golden_rewrite"] = record.golden_rewrite
    return obj


def serialize_dataset(records: Iterable[DatasetRecord]) -> str:
    """Inverse of :func:`parse_dataset`: one JSON object per line."""
    return "".join(json.dumps(record_to_obj(r), ensure_ascii=False) + "\n" for r in records)


def truncate_history(conv: Conversation, k: int) -> Conversation:
    """Keep only the last ``k`` turns; the current query is untouched."""
    if k < 1:
        raise ValueError(f"history window must be >= 1, got {k}")
    if len(conv.turns) <= k:
        return conv
    return Conversation(turns=conv.turns[-k:], current=conv.current)
