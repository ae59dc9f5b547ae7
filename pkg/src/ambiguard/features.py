"""Hand-crafted query features and the robust scaler that normalizes them.

Three scalar signals per query: word count, referential-word count, and a
readability index. Scaling is median/IQR so outliers don't dominate.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Query

# Referential words whose presence tends to mark context-dependent queries.
REFERENTIAL_WORDS = frozenset(
    {
        "this",
        "that",
        "those",
        "it",
        "its",
        "some",
        "others",
        "another",
        "other",
        "them",
        "above",
        "previous",
    }
)

_SENTENCE_END_RUNS = re.compile(r"[.!?]+")


@dataclass(frozen=True)
class FeatureVector:
    """Raw (unscaled) features for one query."""

    f_ql: int
    f_rc: int
    f_cli: float

    def __post_init__(self) -> None:
        if self.f_ql < 1:
            raise ValueError("word count must be >= 1 for a non-empty query")
        if not 0 <= self.f_rc <= self.f_ql:
            raise ValueError("referential count must be in [0, word count]")

    def as_array(self) -> np.ndarray:
        return np.array([self.f_ql, self.f_rc, self.f_cli], dtype=np.float64)


def query_length(q: Query) -> int:
    """Number of whitespace-delimited tokens; attached punctuation stays."""
    return len(q.text.split())


def referential_count(q: Query) -> int:
    """Count tokens in the referential-word list, ignoring case and edge punctuation."""
    count = 0
    for token in q.text.split():
        if token.strip(string.punctuation).lower() in REFERENTIAL_WORDS:
            count += 1
    return count


def sentence_count(text: str) -> int:
    """Maximal runs of terminal punctuation (. ! ?), floored at 1 for fragments."""
    return max(1, len(_SENTENCE_END_RUNS.findall(text)))


def coleman_liau(q: Query) -> float:
    """Readability index 5.89*L/W - 30*S/W - 15.8.

    L counts alphabetic characters only, W whitespace tokens, S sentences.
    """
    letters = sum(1 for ch in q.text if ch.isalpha())
    words = query_length(q)
    sentences = sentence_count(q.text)
    return 5.89 * letters / words - 30.0 * sentences / words - 15.8


def extract(q: Query) -> FeatureVector:
    """All three features for one query."""
    return FeatureVector(f_ql=query_length(q), f_rc=referential_count(q), f_cli=coleman_liau(q))


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature median and interquartile range fitted on training data.

    Zero IQRs are replaced by 1 at fit time so scaling never divides by zero.
    """

    median: tuple[float, float, float]
    iqr: tuple[float, float, float]

    def __post_init__(self) -> None:
        if len(self.median) != 3 or len(self.iqr) != 3:
            raise ValueError("scaler params must cover exactly 3 features")
        if any(v <= 0 for v in self.iqr):
            raise ValueError("IQR entries must be positive after the zero guard")


def fit_scaler(rows: Sequence[FeatureVector]) -> ScalerParams:
    """Median and 75th-minus-25th percentile per feature, linear interpolation."""
    if not rows:
        raise ValueError("cannot fit a scaler on an empty feature list")
    matrix = np.stack([fv.as_array() for fv in rows])
    q25, med, q75 = np.percentile(matrix, [25.0, 50.0, 75.0], axis=0)
    iqr = q75 - q25
    iqr[iqr == 0.0] = 1.0
    return ScalerParams(median=tuple(med.tolist()), iqr=tuple(iqr.tolist()))


def apply_scaler(params: ScalerParams, fv: FeatureVector) -> np.ndarray:
    """Elementwise (x - median) / IQR."""
    return (fv.as_array() - np.asarray(params.median)) / np.asarray(params.iqr)
