"""Entity masking rules and the lexical-ambiguity override."""

import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ambiguard import MaskedQuery, Query, lexical_override, mask_entities
from ambiguard.core import AmbiguityLabel, AmbiguityType, AmbiguityVerdict, VerdictSource
from ambiguard.lexical import (
    DEFAULT_COMMON_WORDS,
    DEFAULT_ENTITY_TYPES,
    MASK_TOKEN,
    EntityTypeLexicon,
    load_word_list,
)

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "masking_cases.json").read_text())


@pytest.mark.parametrize("case", FIXTURES, ids=[c["note"] for c in FIXTURES])
def test_masking_fixture(case):
    masked = mask_entities(Query(case["input"]))
    assert masked.text == case["expected"]
    # one span recorded per mask, and idempotence on the output
    assert masked.mask_count == len(masked.spans)
    again = mask_entities(Query(masked.text))
    assert again.text == masked.text
    assert again.mask_count == 0 or MASK_TOKEN not in case["input"]


def test_mask_count_matches_token_count():
    masked = mask_entities(Query("Is A_1 bigger than B_2?"))
    assert masked.mask_count == 2
    assert masked.text.count(MASK_TOKEN) == 2
    assert mask_entities(Query("How many do I have?")).mask_count == 0


def test_spans_point_at_the_masked_text():
    masked = mask_entities(Query("Show the schema of dataset_42"))
    assert masked.mask_count == 1
    start, end, original = masked.spans[0]
    assert original == "dataset_42"
    # spans index the link-stripped source, which here is the input itself
    assert "Show the schema of dataset_42"[start:end] == original


def test_ordinals_casefold():
    for text in ("the 1ST item", "the 2nd run", "the 3Rd pass", "the 44th week"):
        assert mask_entities(Query(text)).mask_count == 0


def test_common_word_file_override(tmp_path):
    path = tmp_path / "common.txt"
    path.write_text("# comment line\nmy-dataset\n\nT-Shirt\n")
    words = load_word_list(path)
    assert words == frozenset({"my-dataset", "t-shirt"})
    assert mask_entities(Query("Is my-dataset available?"), common_words=words).mask_count == 0
    # the built-in list still masks it
    assert mask_entities(Query("Is my-dataset available?")).mask_count == 1


def test_load_word_list_rejects_empty(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("# nothing but comments\n\n")
    with pytest.raises(ValueError):
        load_word_list(path)


def test_entity_type_lexicon_validation():
    with pytest.raises(ValueError):
        EntityTypeLexicon(frozenset())
    with pytest.raises(ValueError):
        EntityTypeLexicon(frozenset({"Segment"}))
    assert "dataset" in DEFAULT_ENTITY_TYPES.words


def _model_verdict(label: AmbiguityLabel, score: float = 0.25) -> AmbiguityVerdict:
    return AmbiguityVerdict(
        label=label,
        ambiguity_type=AmbiguityType.UNKNOWN,
        score=score,
        source=VerdictSource.MODEL,
    )


def test_override_fires_without_type_word():
    q = Query("What is the total size of 124abcde?")
    masked = mask_entities(q)
    verdict = lexical_override(q, masked, _model_verdict(AmbiguityLabel.CLEAR, 0.12))
    assert verdict.label is AmbiguityLabel.AMBIGUOUS
    assert verdict.ambiguity_type is AmbiguityType.LEXICAL
    assert verdict.source is VerdictSource.LEXICAL_OVERRIDE
    assert verdict.score == 0.12  # model probability carried through


def test_override_respects_type_word_in_original():
    # the type word sits inside the masked span, so only the original shows it
    q = Query("What is the id of 'ABC Dataset (created on)'?")
    masked = mask_entities(q)
    assert masked.mask_count == 1
    verdict = lexical_override(q, masked, _model_verdict(AmbiguityLabel.CLEAR))
    assert verdict.label is AmbiguityLabel.CLEAR
    assert verdict.source is VerdictSource.MODEL


def test_override_needs_a_mask():
    q = Query("What is the total size?")
    verdict = lexical_override(q, mask_entities(q), _model_verdict(AmbiguityLabel.CLEAR))
    assert verdict.label is AmbiguityLabel.CLEAR


def test_override_never_softens_ambiguous():
    q = Query("What is the total size of 124abcde?")
    model = _model_verdict(AmbiguityLabel.AMBIGUOUS, 0.9)
    assert lexical_override(q, mask_entities(q), model) is model


def test_override_custom_lexicon():
    q = Query("What is the size of report_7?")
    masked = mask_entities(q)
    default = lexical_override(q, masked, _model_verdict(AmbiguityLabel.CLEAR))
    assert default.label is AmbiguityLabel.AMBIGUOUS
    reports = EntityTypeLexicon(frozenset({"report"}))
    with_word = lexical_override(
        Query("What report is the size of report_7?"),
        mask_entities(Query("What report is the size of report_7?")),
        _model_verdict(AmbiguityLabel.CLEAR),
        lexicon=reports,
    )
    assert with_word.label is AmbiguityLabel.CLEAR


_texts = st.text(
    alphabet=st.characters(codec="ascii", exclude_categories=("Cc",)),
    min_size=1,
    max_size=80,
).filter(lambda s: s.strip())


@given(_texts)
def test_masking_idempotent_on_arbitrary_ascii(text):
    first = mask_entities(Query(text))
    second = mask_entities(Query(first.text)) if first.text.strip() else first
    assert second.text == first.text


@given(_texts)
def test_masking_invariants(text):
    masked = mask_entities(Query(text))
    assert isinstance(masked, MaskedQuery)
    assert masked.mask_count == len(masked.spans)
    assert masked.mask_count >= 0
    for _, _, original in masked.spans:
        assert original  # never an empty capture
        assert original not in DEFAULT_COMMON_WORDS
