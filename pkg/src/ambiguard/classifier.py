"""Two-layer classification head over [embedding ‖ scaled features].

The backbone embedder is frozen; only this head trains. Architecture:
logits = W2 · dropout(tanh(W1 · x + b1)) + b2 with a (D+3, H) first layer,
H=384 by default. Training uses mean cross-entropy, Adam, class-balanced
sampling with replacement, and periodic validation checkpointing keeping the
weights with the best (recall + F1)/2 for the ambiguous class.

Everything is plain numpy and bit-reproducible given (seed, embedder
identity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import AmbiguityLabel, AmbiguityType, AmbiguityVerdict, Query, VerdictSource
from .embed import Embedder
from .features import ScalerParams, apply_scaler, extract, fit_scaler
from .lexical import Lexicons, lexical_override, mask_entities

N_FEATURES = 3
N_CLASSES = 2
AMBIGUOUS_INDEX = 1


@dataclass(frozen=True)
class HeadWeights:
    """Dense parameters; arrays are treated as immutable once constructed."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    dropout_p: float = 0.1

    def __post_init__(self) -> None:
        din, hidden = self.W1.shape
        if self.b1.shape != (hidden,):
            raise ValueError(f"b1 shape {self.b1.shape} does not match hidden width {hidden}")
        if self.W2.shape != (hidden, N_CLASSES):
            raise ValueError(f"W2 shape {self.W2.shape}, expected ({hidden}, {N_CLASSES})")
        if self.b2.shape != (N_CLASSES,):
            raise ValueError(f"b2 shape {self.b2.shape}, expected ({N_CLASSES},)")
        if din <= N_FEATURES:
            raise ValueError("input width must exceed the feature count")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must be in [0, 1)")

    @property
    def input_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2e-5
    batch_size: int = 4
    epochs: int = 3
    eval_every: int = 50
    seed: int = 0
    dropout_p: float = 0.1
    hidden: int = 384
    threshold: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning_rate, batch_size and epochs must be positive")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")


@dataclass(frozen=True)
class ClassifierModel:
    """A trained head plus everything inference needs."""

    head: HeadWeights
    scaler: ScalerParams
    embedder: Embedder
    threshold: float = 0.5
    version: str = "fc-head:untrained"

    def __post_init__(self) -> None:
        if self.embedder.dim + N_FEATURES != self.head.input_dim:
            raise ValueError(
                f"embedder dim {self.embedder.dim} + {N_FEATURES} features "
                f"!= head input width {self.head.input_dim}"
            )


@dataclass(frozen=True)
class EvalPoint:
    """One validation pass during training."""

    step: int
    recall: float
    f1: float

    @property
    def metric(self) -> float:
        return (self.recall + self.f1) / 2.0


@dataclass(frozen=True)
class TrainResult:
    model: ClassifierModel
    evals: tuple[EvalPoint, ...]
    best_step: int


def init_head(
    input_dim: int, hidden: int, dropout_p: float, rng: np.random.Generator
) -> HeadWeights:
    """Per-layer uniform init in ±sqrt(6 / (fan_in + fan_out)); zero biases."""
    a1 = math.sqrt(6.0 / (input_dim + hidden))
    a2 = math.sqrt(6.0 / (hidden + N_CLASSES))
    return HeadWeights(
        W1=rng.uniform(-a1, a1, size=(input_dim, hidden)),
        b1=np.zeros(hidden),
        W2=rng.uniform(-a2, a2, size=(hidden, N_CLASSES)),
        b2=np.zeros(N_CLASSES),
        dropout_p=dropout_p,
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def _dropout_mask(
    head: HeadWeights, shape: tuple[int, int], rng: np.random.Generator | None
) -> np.ndarray | None:
    if head.dropout_p == 0.0:
        return None
    if rng is None:
        raise ValueError("training forward with dropout requires an rng")
    keep = 1.0 - head.dropout_p
    return (rng.random(shape) < keep).astype(np.float64) / keep


def forward_batch(
    head: HeadWeights,
    x: np.ndarray,
    *,
    training: bool = False,
    rng: np.random.Generator | None = None,
    dropout_mask: np.ndarray | None = None,
) -> np.ndarray:
    """Logits for a (n, D+3) batch. Inference (training=False) is pure."""
    if x.ndim != 2 or x.shape[1] != head.input_dim:
        raise ValueError(f"input shape {x.shape} does not match head width {head.input_dim}")
    hidden = np.tanh(x @ head.W1 + head.b1)
    if training:
        mask = dropout_mask if dropout_mask is not None else _dropout_mask(head, hidden.shape, rng)
        if mask is not None:
            hidden = hidden * mask
    return hidden @ head.W2 + head.b2


def forward(
    head: HeadWeights,
    t: np.ndarray,
    f_scaled: np.ndarray,
    *,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Logits (shape (2,)) for one embedding plus its scaled features."""
    x = np.concatenate([np.asarray(t, dtype=np.float64), np.asarray(f_scaled, dtype=np.float64)])
    return forward_batch(head, x[None, :], training=training, rng=rng)[0]


def loss_and_gradients(
    head: HeadWeights,
    x: np.ndarray,
    labels: np.ndarray,
    *,
    rng: np.random.Generator | None = None,
    dropout_mask: np.ndarray | None = None,
    training: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its analytic gradients.

    Passing an explicit dropout_mask makes the loss a deterministic function
    of the weights, which the finite-difference tests rely on.
    """
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("batch must be a non-empty (n, D+3) matrix")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (x.shape[0],):
        raise ValueError("labels must align with the batch rows")

    n = x.shape[0]
    pre = x @ head.W1 + head.b1
    act = np.tanh(pre)
    if training:
        mask = dropout_mask if dropout_mask is not None else _dropout_mask(head, act.shape, rng)
    else:
        mask = None
    hidden = act * mask if mask is not None else act
    logits = hidden @ head.W2 + head.b2

    shifted = logits - np.max(logits, axis=1, keepdims=True)
    log_probs = shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
    loss = float(-np.mean(log_probs[np.arange(n), labels]))

    d_logits = np.exp(log_probs)
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n
    grad_W2 = hidden.T @ d_logits
    grad_b2 = d_logits.sum(axis=0)
    d_hidden = d_logits @ head.W2.T
    d_act = d_hidden * mask if mask is not None else d_hidden
    d_pre = d_act * (1.0 - act * act)
    grad_W1 = x.T @ d_pre
    grad_b1 = d_pre.sum(axis=0)
    return loss, {"W1": grad_W1, "b1": grad_b1, "W2": grad_W2, "b2": grad_b2}


def weighted_sample(
    labels: Sequence[AmbiguityLabel], batch_size: int, rng: np.random.Generator
) -> np.ndarray:
    """Indices sampled with replacement, weight inverse to class frequency.

    Expected per-batch class ratio is 1:1 regardless of the split.
    """
    y = np.array([1 if lab is AmbiguityLabel.AMBIGUOUS else 0 for lab in labels])
    counts = np.bincount(y, minlength=2)
    if counts[0] == 0 or counts[1] == 0:
        raise ValueError("weighted sampling requires both classes present")
    weights = 1.0 / counts[y]
    return rng.choice(len(y), size=batch_size, replace=True, p=weights / weights.sum())


class _Adam:
    """Standard Adam with bias correction; state keyed like the grad dict."""

    def __init__(self, params: dict[str, np.ndarray], cfg: TrainConfig) -> None:
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        for key, grad in grads.items():
            self.m[key] = c.beta1 * self.m[key] + (1 - c.beta1) * grad
            self.v[key] = c.beta2 * self.v[key] + (1 - c.beta2) * grad * grad
            m_hat = self.m[key] / (1 - c.beta1**self.t)
            v_hat = self.v[key] / (1 - c.beta2**self.t)
            params[key] -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


def ambiguous_recall_f1(
    scores: np.ndarray, y_true: np.ndarray, threshold: float
) -> tuple[float, float]:
    """Recall and F1 with ambiguous as the positive class; ties go ambiguous."""
    preds = scores >= threshold
    actual = y_true == 1
    tp = int(np.sum(preds & actual))
    fp = int(np.sum(preds & ~actual))
    fn = int(np.sum(~preds & actual))
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return recall, f1


def _design_matrix(
    queries: Sequence[Query], embedder: Embedder, scaler: ScalerParams
) -> np.ndarray:
    embeddings = embedder.embed([q.text for q in queries])
    feats = np.stack([apply_scaler(scaler, extract(q)) for q in queries])
    return np.concatenate([embeddings, feats], axis=1)


def _split_labels(records) -> np.ndarray:
    labels = []
    for r in records:
        if r.label is None:
            raise ValueError(f"record {r.id!r} is unlabeled; training data must be labeled")
        labels.append(1 if r.label is AmbiguityLabel.AMBIGUOUS else 0)
    y = np.array(labels, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError("split must contain both classes")
    return y


def train(records, validation, cfg: TrainConfig, embedder: Embedder) -> TrainResult:
    """Train the head; returns the best-on-validation model plus eval history.

    Deterministic given (cfg.seed, embedder identity): one Generator drives
    init, sampling, and dropout in a fixed draw order.
    """
    if not records or not validation:
        raise ValueError("training and validation splits must be non-empty")
    y_train = _split_labels(records)
    y_val = _split_labels(validation)

    scaler = fit_scaler([extract(r.query) for r in records])
    x_train = _design_matrix([r.query for r in records], embedder, scaler)
    x_val = _design_matrix([r.query for r in validation], embedder, scaler)

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    head = init_head(embedder.dim + N_FEATURES, cfg.hidden, cfg.dropout_p, rng)
    params = {"W1": head.W1.copy(), "b1": head.b1.copy(), "W2": head.W2.copy(), "b2": head.b2.copy()}
    optimizer = _Adam(params, cfg)
    train_labels = [r.label for r in records]

    steps_per_epoch = math.ceil(len(records) / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    evals: list[EvalPoint] = []
    best: tuple[float, int, dict[str, np.ndarray]] | None = None

    def current_head() -> HeadWeights:
        return HeadWeights(
            W1=params["W1"].copy(),
            b1=params["b1"].copy(),
            W2=params["W2"].copy(),
            b2=params["b2"].copy(),
            dropout_p=cfg.dropout_p,
        )

    def evaluate(step: int) -> None:
        nonlocal best
        logits = forward_batch(current_head(), x_val, training=False)
        scores = softmax(logits)[:, AMBIGUOUS_INDEX]
        recall, f1 = ambiguous_recall_f1(scores, y_val, cfg.threshold)
        point = EvalPoint(step=step, recall=recall, f1=f1)
        evals.append(point)
        # Strict improvement only: on ties the earlier checkpoint stands.
        if best is None or point.metric > best[0]:
            best = (point.metric, step, {k: v.copy() for k, v in params.items()})

    for step in range(1, total_steps + 1):
        batch_idx = weighted_sample(train_labels, cfg.batch_size, rng)
        working = HeadWeights(
            W1=params["W1"], b1=params["b1"], W2=params["W2"], b2=params["b2"],
            dropout_p=cfg.dropout_p,
        )
        _, grads = loss_and_gradients(
            working, x_train[batch_idx], y_train[batch_idx], rng=rng, training=True
        )
        optimizer.step(params, grads)
        if step % cfg.eval_every == 0:
            evaluate(step)
    if not evals or evals[-1].step != total_steps:
        evaluate(total_steps)

    assert best is not None
    _, best_step, best_params = best
    model = ClassifierModel(
        head=HeadWeights(
            W1=best_params["W1"], b1=best_params["b1"],
            W2=best_params["W2"], b2=best_params["b2"], dropout_p=cfg.dropout_p,
        ),
        scaler=scaler,
        embedder=embedder,
        threshold=cfg.threshold,
        version=f"fc-head:seed={cfg.seed}:dim={embedder.dim}:h={cfg.hidden}:step={best_step}",
    )
    return TrainResult(model=model, evals=tuple(evals), best_step=best_step)


def predict_scores(model: ClassifierModel, queries: Sequence[Query]) -> np.ndarray:
    """Ambiguous-class probability per query, vectorized."""
    x = _design_matrix(queries, model.embedder, model.scaler)
    return softmax(forward_batch(model.head, x, training=False))[:, AMBIGUOUS_INDEX]


def classify(model: ClassifierModel, q: Query, lexicons: Lexicons = Lexicons()) -> AmbiguityVerdict:
    """Model verdict plus the lexical-override escalation.

    The model itself never names an ambiguity type (UNKNOWN); only the
    lexical rule assigns LEXICAL.
    """
    score = float(predict_scores(model, [q])[0])
    label = AmbiguityLabel.AMBIGUOUS if score >= model.threshold else AmbiguityLabel.CLEAR
    verdict = AmbiguityVerdict(
        label=label,
        ambiguity_type=AmbiguityType.UNKNOWN,
        score=score,
        source=VerdictSource.MODEL,
    )
    masked = mask_entities(q, lexicons.common_words)
    return lexical_override(q, masked, verdict, lexicons.entity_types)
