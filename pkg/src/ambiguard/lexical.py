"""Rule-based entity masking and the lexical-ambiguity override.

Masking pipeline, in order: strip weblinks, exempt ordinals and common
hyphenated English words, then replace quoted spans and tokens carrying
digits / periods / colons / underscores / dashes with the literal "ENTITY".
A query whose masked form contains an ENTITY but whose original text names
no known entity type is escalated to lexically ambiguous.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .core import AmbiguityLabel, AmbiguityType, AmbiguityVerdict, Query, VerdictSource

MASK_TOKEN = "ENTITY"

_WEBLINK = re.compile(r"\s*(?:https?://\S+|www\.\S+)", re.IGNORECASE)
# Quotes must sit on token boundaries so apostrophes inside words don't pair up.
_QUOTED = re.compile(
    r"(?:^|(?<=\s))'[^']*'(?=[\s.,;:!?)\]]|$)"
    r"|(?:^|(?<=\s))\"[^\"]*\"(?=[\s.,;:!?)\]]|$)"
)
_CANDIDATE = re.compile(r"[A-Za-z0-9._:\-]+")
_TRIGGER = re.compile(r"[0-9._:\-]")
_ORDINAL = re.compile(r"\d+(?:st|nd|rd|th)", re.IGNORECASE)
_HYPHEN_WORD = re.compile(r"[A-Za-z]+(?:-[A-Za-z]+)+")
_EDGE_PUNCT = "._:-"


@dataclass(frozen=True)
class MaskedQuery:
    """Masking outcome; spans index into the link-stripped source text."""

    text: str
    mask_count: int
    spans: tuple[tuple[int, int, str], ...]


@dataclass(frozen=True)
class EntityTypeLexicon:
    """Lowercase business-object words (or space-joined phrases)."""

    words: frozenset[str]

    def __post_init__(self) -> None:
        if not self.words:
            raise ValueError("entity-type lexicon must not be empty")
        bad = [w for w in self.words if not w or w != w.lower()]
        if bad:
            raise ValueError(f"lexicon entries must be lowercase and non-empty: {bad!r}")


DEFAULT_ENTITY_TYPES = EntityTypeLexicon(frozenset({"segment", "dataset", "schema", "audience"}))

# Small built-in list of hyphenated words common enough in English to keep
# unmasked; extend or replace via a word-list file.
DEFAULT_COMMON_WORDS = frozenset(
    {
        "pre-requisite",
        "pre-requisites",
        "well-known",
        "e-mail",
        "e-mails",
        "co-worker",
        "co-workers",
        "real-time",
        "up-to-date",
        "state-of-the-art",
        "follow-up",
        "sign-in",
        "sign-up",
        "log-in",
        "opt-in",
        "opt-out",
        "on-premise",
        "on-premises",
        "self-service",
        "long-term",
        "short-term",
        "high-level",
        "low-level",
        "built-in",
        "read-only",
        "re-run",
        "multi-turn",
        "end-to-end",
        "out-of-the-box",
        "third-party",
        "so-called",
    }
)


@dataclass(frozen=True)
class Lexicons:
    """Bundle of the two word lists the detection path needs."""

    entity_types: EntityTypeLexicon = DEFAULT_ENTITY_TYPES
    common_words: frozenset[str] = DEFAULT_COMMON_WORDS


def load_word_list(path: str | Path) -> frozenset[str]:
    """One lowercase entry per line; blank lines and ``#`` comments skipped."""
    words = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        words.add(line.lower())
    if not words:
        raise ValueError(f"word list {path} contains no entries")
    return frozenset(words)


def _strip_links(text: str) -> str:
    if not _WEBLINK.search(text):
        return text
    return _WEBLINK.sub("", text).strip()


def _exempt(token: str, common_words: frozenset[str]) -> bool:
    if _ORDINAL.fullmatch(token):
        return True
    return bool(_HYPHEN_WORD.fullmatch(token)) and token.lower() in common_words


def _candidate_spans(text: str, common_words: frozenset[str]) -> list[tuple[int, int]]:
    spans: list[tuple[int, int]] = []
    for match in _QUOTED.finditer(text):
        spans.append((match.start(), match.end()))

    def inside_quoted(start: int, end: int) -> bool:
        return any(qs <= start and end <= qe for qs, qe in spans)

    for match in _CANDIDATE.finditer(text):
        token = match.group()
        start = match.start() + (len(token) - len(token.lstrip(_EDGE_PUNCT)))
        token = token.strip(_EDGE_PUNCT)
        if not token or inside_quoted(start, start + len(token)):
            continue
        if _exempt(token, common_words) or not _TRIGGER.search(token):
            continue
        spans.append((start, start + len(token)))
    spans.sort()
    return spans


def mask_entities(q: Query, common_words: frozenset[str] = DEFAULT_COMMON_WORDS) -> MaskedQuery:
    """Apply the masking rules; links are deleted, matches become ENTITY."""
    source = _strip_links(q.text)
    pieces: list[str] = []
    spans: list[tuple[int, int, str]] = []
    cursor = 0
    for start, end in _candidate_spans(source, common_words):
        pieces.append(source[cursor:start])
        pieces.append(MASK_TOKEN)
        spans.append((start, end, source[start:end]))
        cursor = end
    pieces.append(source[cursor:])
    return MaskedQuery(text="".join(pieces), mask_count=len(spans), spans=tuple(spans))


def _mentions_entity_type(text: str, lexicon: EntityTypeLexicon) -> bool:
    lowered = text.lower()
    return any(re.search(rf"\b{re.escape(word)}\b", lowered) for word in lexicon.words)


def lexical_override(
    q: Query,
    masked: MaskedQuery,
    model_verdict: AmbiguityVerdict,
    lexicon: EntityTypeLexicon = DEFAULT_ENTITY_TYPES,
) -> AmbiguityVerdict:
    """Escalate a clear model verdict when an ENTITY has no named type.

    One-directional: an ambiguous model verdict is never softened. Entity-type
    presence is checked against the original query text so type words inside
    masked spans still count.
    """
    if (
        model_verdict.label is AmbiguityLabel.CLEAR
        and masked.mask_count >= 1
        and not _mentions_entity_type(q.text, lexicon)
    ):
        return AmbiguityVerdict(
            label=AmbiguityLabel.AMBIGUOUS,
            ambiguity_type=AmbiguityType.LEXICAL,
            score=model_verdict.score,
            source=VerdictSource.LEXICAL_OVERRIDE,
        )
    return model_verdict
