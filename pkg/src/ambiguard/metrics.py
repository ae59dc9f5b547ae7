"""Classification metrics, rewrite-similarity metrics, and the
three-framework comparison harness.

BLEU here is the average of BLEU-1 and BLEU-2 with clipped modified
precision, standard brevity penalty, and no smoothing: short sentences can
legitimately score zero.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .core import AmbiguityLabel
from .embed import Embedder, cosine
from .lexical import Lexicons
from .pipeline import FrameworkMode, Rewriter, RoutingRecord, process_batch

_TERMINAL_PUNCT = re.compile(r"^(.*?)([.!?]+)$")


@dataclass(frozen=True)
class ClassificationReport:
    """Precision/recall/F1/accuracy with ambiguous as the positive class."""

    precision: float
    recall: float
    f1: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class FrameworkReport:
    mode: FrameworkMode
    mean_bleu: float
    mean_cosine: float
    n: int
    degraded_count: int


def classification_metrics(
    preds: Sequence[AmbiguityLabel], gold: Sequence[AmbiguityLabel]
) -> ClassificationReport:
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} preds vs {len(gold)} gold")
    if not preds:
        raise ValueError("cannot compute metrics on empty input")
    tp = fp = tn = fn = 0
    for p, g in zip(preds, gold):
        if p is AmbiguityLabel.AMBIGUOUS:
            if g is AmbiguityLabel.AMBIGUOUS:
                tp += 1
            else:
                fp += 1
        else:
            if g is AmbiguityLabel.AMBIGUOUS:
                fn += 1
            else:
                tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(preds)
    return ClassificationReport(
        precision=precision, recall=recall, f1=f1, accuracy=accuracy,
        tp=tp, fp=fp, tn=tn, fn=fn,
    )


def bleu_tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, detach terminal punctuation runs."""
    tokens: list[str] = []
    for raw in text.lower().split():
        match = _TERMINAL_PUNCT.match(raw)
        if match and match.group(1):
            tokens.append(match.group(1))
            tokens.append(match.group(2))
        else:
            tokens.append(raw)
    return tokens


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _modified_precision(cand: list[str], ref: list[str], n: int) -> float:
    cand_counts = _ngrams(cand, n)
    total = sum(cand_counts.values())
    if total == 0:
        return 0.0
    ref_counts = _ngrams(ref, n)
    clipped = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    return clipped / total


def bleu_avg12(candidate: str, reference: str) -> float:
    """Arithmetic mean of BLEU-1 and BLEU-2.

    BLEU-2 uses the geometric mean of the 1- and 2-gram precisions; both
    scores share the brevity penalty exp(1 - r/c) when the candidate is
    shorter than the reference.
    """
    if not candidate.strip() or not reference.strip():
        raise ValueError("BLEU requires non-empty candidate and reference")
    cand = bleu_tokenize(candidate)
    ref = bleu_tokenize(reference)
    c, r = len(cand), len(ref)
    bp = math.exp(1.0 - r / c) if c < r else 1.0
    p1 = _modified_precision(cand, ref, 1)
    p2 = _modified_precision(cand, ref, 2)
    bleu1 = p1 * bp
    bleu2 = math.sqrt(p1 * p2) * bp
    return (bleu1 + bleu2) / 2.0


def rewrite_similarity(
    record: RoutingRecord, golden: str, embedder: Embedder
) -> tuple[float, float]:
    """(BLEU, cosine) of the routed query against the golden rewrite.

    Metric runs are not fail-open: embedder errors propagate.
    """
    if not golden.strip():
        raise ValueError("golden rewrite must be non-empty")
    bleu = bleu_avg12(record.routed.text, golden)
    vectors = embedder.embed([record.routed.text, golden])
    return bleu, cosine(vectors[0], vectors[1])


def compare_frameworks(
    records,
    model,
    rewriter: Rewriter,
    embedder: Embedder,
    lexicons: Lexicons = Lexicons(),
    modes: Sequence[FrameworkMode] = (
        FrameworkMode.NO_REWRITE,
        FrameworkMode.ALWAYS_REWRITE,
        FrameworkMode.GUIDED,
    ),
) -> list[FrameworkReport]:
    """Route every record through each mode and average the similarities."""
    if not records:
        raise ValueError("comparison needs at least one record")
    missing = [r.id for r in records if not r.golden_rewrite]
    if missing:
        raise ValueError(f"records missing golden_rewrite: {missing[:5]}")
    reports: list[FrameworkReport] = []
    for mode in modes:
        routed = process_batch(records, mode, model, rewriter, lexicons)
        bleus: list[float] = []
        cosines: list[float] = []
        degraded = 0
        for record, routing in zip(records, routed):
            bleu, cos = rewrite_similarity(routing, record.golden_rewrite, embedder)
            bleus.append(bleu)
            cosines.append(cos)
            degraded += int(routing.degraded)
        n = len(records)
        reports.append(
            FrameworkReport(
                mode=mode,
                mean_bleu=sum(bleus) / n,
                mean_cosine=sum(cosines) / n,
                n=n,
                degraded_count=degraded,
            )
        )
    return reports


def framework_reports_to_obj(reports: Sequence[FrameworkReport]) -> list[dict]:
    return [
        {
            "mode": r.mode.value,
            "mean_bleu": r.mean_bleu,
            "mean_cosine": r.mean_cosine,
            "n": r.n,
            "degraded_count": r.degraded_count,
        }
        for r in reports
    ]


def format_framework_table(reports: Sequence[FrameworkReport]) -> str:
    """Aligned plain-text table, one row per mode."""
    header = f"{'mode':<16} {'mean_bleu':>10} {'mean_cosine':>12} {'n':>6} {'degraded':>9}"
    rows = [header, "-" * len(header)]
    for r in reports:
        rows.append(
            f"{r.mode.value:<16} {r.mean_bleu:>10.4f} {r.mean_cosine:>12.4f} "
            f"{r.n:>6d} {r.degraded_count:>9d}"
        )
    return "\n".join(rows)
