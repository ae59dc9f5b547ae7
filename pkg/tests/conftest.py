"""Shared fixtures. The trained model is expensive, so it is session-scoped."""

from __future__ import annotations

import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synth  # noqa: E402
from ambiguard import HashingEmbedder, TrainConfig, train  # noqa: E402


@pytest.fixture(scope="session")
def corpus_splits():
    clear, ambiguous = synth.build_training_corpus()
    train_set, val_set, test_set = synth.stratified_split(
        clear + ambiguous, seed=synth.TRAIN_SEED
    )
    return {
        "clear": clear,
        "ambiguous": ambiguous,
        "train": train_set,
        "val": val_set,
        "test": test_set,
    }


@pytest.fixture(scope="session")
def train_outcome(corpus_splits):
    """Train once with the reference hyperparameters; report wall time."""
    embedder = HashingEmbedder(dim=768)
    cfg = TrainConfig(seed=synth.TRAIN_SEED)
    start = time.perf_counter()
    result = train(corpus_splits["train"], corpus_splits["val"], cfg, embedder)
    elapsed = time.perf_counter() - start
    return {"result": result, "elapsed_s": elapsed, "embedder": embedder, "config": cfg}


@pytest.fixture(scope="session")
def trained_model(train_outcome):
    return train_outcome["result"].model
