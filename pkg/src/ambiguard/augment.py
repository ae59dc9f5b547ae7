"""Synthesizes ambiguous training queries from clear ones.

Four mechanical generators, applied in fixed order per source record:
omit details after "the <word> of", swap "the" for a referential word,
rewrite imperative openings into vague statements, and delete entity-type
words. All outputs are labeled ambiguous and deduplicated globally.

Determinism: every (record, rule) pair owns its own random stream seeded
from the corpus seed, so augmentation is byte-reproducible and could be
parallelized per record without changing output.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum

from .core import AmbiguityLabel, DatasetRecord, Query
from .lexical import DEFAULT_ENTITY_TYPES, EntityTypeLexicon

OMIT_PATTERN = re.compile(r"the (\w+) of")

# Rule-2 replacement list; deliberately excludes "them", unlike the
# referential-count feature list.
REFERENTIAL_REPLACEMENTS = (
    "this", "that", "those", "it", "its", "some",
    "others", "another", "other", "above", "previous",
)

VAGUE_PHRASES = (
    "there is", "there are", "there is no such", "there is no",
    "there are no such", "there are no", "there is not any",
    "it is", "it is not", "this is not", "this is", "that is", "that is not",
)

DEFAULT_IMPERATIVE_VERBS = frozenset(
    {"tell", "show", "give", "list", "explain", "describe", "find", "get", "create", "delete"}
)
DEFAULT_PRONOUNS = frozenset({"me", "us", "them", "it"})

# A pronoun-led preposition ("tell me about X") is elided along with the
# verb+pronoun pair so the vague statement reads as one clause.
_ELIDED_PREPOSITIONS = frozenset(
    {"about", "of", "on", "in", "at", "for", "with", "to", "regarding", "concerning"}
)

SHORT_QUERY_MAX_WORDS = 7
DEFAULT_REPETITIONS = 5


class AugmentationRule(str, Enum):
    OMIT_DETAILS = "omit_details"
    ADD_REFERENTIAL = "add_referential"
    VAGUE_STATEMENT = "vague_statement"
    REMOVE_ENTITY_TYPE = "remove_entity_type"


@dataclass(frozen=True)
class AugmentationReport:
    rule: AugmentationRule
    source_id: str
    generated: tuple[Query, ...]


def _is_question(text: str) -> bool:
    return text.rstrip().endswith("?")


def omit_details(q: Query) -> Query | None:
    """Drop everything from the "of" in the first "the <word> of" onward."""
    match = OMIT_PATTERN.search(q.text)
    if match is None:
        return None
    prefix = q.text[: match.end() - len("of")].rstrip()
    if not prefix:
        return None
    result = prefix + "?" if _is_question(q.text) else prefix
    return Query(result) if result != q.text else None


def add_referential(
    q: Query, rng: random.Random, repetitions: int = DEFAULT_REPETITIONS
) -> list[Query]:
    """Swap one "the" for a referential word, `repetitions` times, deduplicated."""
    tokens = q.text.split()
    positions = [i for i, tok in enumerate(tokens) if tok.lower() == "the"]
    if not positions:
        return []
    out: list[Query] = []
    seen: set[str] = set()
    for _ in range(repetitions):
        pos = positions[rng.randrange(len(positions))]
        word = rng.choice(REFERENTIAL_REPLACEMENTS)
        if tokens[pos][0].isupper():
            word = word.capitalize()
        candidate = " ".join(tokens[:pos] + [word] + tokens[pos + 1 :])
        if candidate != q.text and candidate not in seen:
            seen.add(candidate)
            out.append(Query(candidate))
    return out


def vague_statement(
    q: Query,
    rng: random.Random,
    repetitions: int = DEFAULT_REPETITIONS,
    verbs: frozenset[str] = DEFAULT_IMPERATIVE_VERBS,
    pronouns: frozenset[str] = DEFAULT_PRONOUNS,
) -> list[Query]:
    """Rewrite a non-question starting verb+pronoun into a vague statement.

    The verb and pronoun are replaced by one of the stock phrases; a
    preposition immediately after the pronoun is elided with them
    ("Tell me about X" becomes "There is no such X").
    """
    if "?" in q.text:
        return []
    tokens = q.text.split()
    if len(tokens) < 2 or tokens[0].lower() not in verbs or tokens[1].lower() not in pronouns:
        return []
    rest_start = 2
    if len(tokens) > 2 and tokens[2].lower() in _ELIDED_PREPOSITIONS:
        rest_start = 3
    rest = tokens[rest_start:]
    out: list[Query] = []
    seen: set[str] = set()
    for _ in range(repetitions):
        phrase = rng.choice(VAGUE_PHRASES)
        candidate = " ".join([phrase[0].upper() + phrase[1:]] + rest)
        if candidate != q.text and candidate not in seen:
            seen.add(candidate)
            out.append(Query(candidate))
    return out


def remove_entity_types(q: Query, lexicon: EntityTypeLexicon = DEFAULT_ENTITY_TYPES) -> Query | None:
    """Delete every entity-type word (singular or plural), if any."""
    pattern = re.compile(
        r"\b(?:" + "|".join(re.escape(w) for w in sorted(lexicon.words)) + r")s?\b",
        re.IGNORECASE,
    )
    if not pattern.search(q.text):
        return None
    text = pattern.sub("", q.text)
    text = re.sub(r"\s{2,}", " ", text)
    text = re.sub(r"\s+([?.!,;:])", r"\1", text).strip()
    if not text or text == q.text:
        return None
    return Query(text)


def _rule_rng(seed: int, record_id: str, tag: str) -> random.Random:
    return random.Random(f"{seed}:{record_id}:{tag}")


def augment_corpus(
    records: list[DatasetRecord],
    seed: int,
    repetitions: int = DEFAULT_REPETITIONS,
    verbs: frozenset[str] = DEFAULT_IMPERATIVE_VERBS,
    pronouns: frozenset[str] = DEFAULT_PRONOUNS,
    entity_types: EntityTypeLexicon = DEFAULT_ENTITY_TYPES,
) -> tuple[list[DatasetRecord], list[AugmentationReport]]:
    """Generate ambiguous records from the clear ones, in fixed rule order.

    Rule 1 applies to every clear query; rule 2 to rule-1 outputs and to
    clear queries of at most 7 words; rule 3 to clear non-questions; entity
    removal to every clear query. Outputs duplicating any source query or an
    earlier generated query are dropped.
    """
    for r in records:
        if r.label is None:
            raise ValueError(f"record {r.id!r} is unlabeled; augmentation needs labels")

    seen_texts = {r.query.text for r in records}
    used_ids = {r.id for r in records}
    generated: list[DatasetRecord] = []
    reports: list[AugmentationReport] = []

    def admit(source: DatasetRecord, rule: AugmentationRule, queries: list[Query]) -> None:
        fresh: list[Query] = []
        for q in queries:
            if q.text in seen_texts:
                continue
            seen_texts.add(q.text)
            fresh.append(q)
            n = 1
            rid = f"{source.id}-{rule.value}-{n}"
            while rid in used_ids:
                n += 1
                rid = f"{source.id}-{rule.value}-{n}"
            used_ids.add(rid)
            generated.append(DatasetRecord(id=rid, query=q, label=AmbiguityLabel.AMBIGUOUS))
        if fresh:
            reports.append(AugmentationReport(rule=rule, source_id=source.id, generated=tuple(fresh)))

    for record in records:
        if record.label is not AmbiguityLabel.CLEAR:
            continue
        q = record.query

        omitted = omit_details(q)
        if omitted is not None:
            admit(record, AugmentationRule.OMIT_DETAILS, [omitted])

        referential: list[Query] = []
        if omitted is not None:
            rng = _rule_rng(seed, record.id, "add_referential:post_omit")
            referential.extend(add_referential(omitted, rng, repetitions))
        if len(q.text.split()) <= SHORT_QUERY_MAX_WORDS:
            rng = _rule_rng(seed, record.id, "add_referential:direct")
            referential.extend(add_referential(q, rng, repetitions))
        if referential:
            admit(record, AugmentationRule.ADD_REFERENTIAL, referential)

        rng = _rule_rng(seed, record.id, "vague_statement")
        vague = vague_statement(q, rng, repetitions, verbs, pronouns)
        if vague:
            admit(record, AugmentationRule.VAGUE_STATEMENT, vague)

        dropped = remove_entity_types(q, entity_types)
        if dropped is not None:
            admit(record, AugmentationRule.REMOVE_ENTITY_TYPE, [dropped])

    return generated, reports
