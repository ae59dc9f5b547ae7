"""Single-file JSON checkpoints for trained classifiers.

The payload is self-describing: flat weight arrays plus shapes, scaler
params, embedder identity, and a sha256 checksum over the canonical JSON
encoding of everything else. Saving the same model twice yields identical
bytes; any bit flip fails the checksum on load.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .classifier import ClassifierModel, HeadWeights, TrainConfig
from .embed import Embedder, HashingEmbedder
from .features import ScalerParams

FORMAT_VERSION = "1"


class CheckpointError(RuntimeError):
    """Checkpoint is corrupt, unsupported, or inconsistent with the embedder."""


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _checksum(payload: dict) -> str:
    return hashlib.sha256(_canonical(payload)).hexdigest()


def _embedder_obj(embedder: Embedder) -> dict:
    if isinstance(embedder, HashingEmbedder):
        return {"kind": "hashing", "name": embedder.name, "dim": embedder.dim,
                "identity": embedder.identity}
    return {"kind": "remote", "dim": embedder.dim, "identity": embedder.identity}


def save_checkpoint(model: ClassifierModel, train_config: TrainConfig | None = None) -> bytes:
    head = model.head
    payload = {
        "format_version": FORMAT_VERSION,
        "version": model.version,
        "threshold": model.threshold,
        "embedder": _embedder_obj(model.embedder),
        "scaler": {"median": list(model.scaler.median), "iqr": list(model.scaler.iqr)},
        "head": {
            "dropout_p": head.dropout_p,
            "weights": {
                name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
                for name, arr in (
                    ("W1", head.W1), ("b1", head.b1), ("W2", head.W2), ("b2", head.b2),
                )
            },
        },
        "train_config": dataclasses.asdict(train_config) if train_config else None,
    }
    payload["checksum"] = _checksum({k: v for k, v in payload.items() if k != "checksum"})
    return _canonical(payload) + b"\n"


def save_checkpoint_file(
    model: ClassifierModel, path: str | Path, train_config: TrainConfig | None = None
) -> None:
    Path(path).write_bytes(save_checkpoint(model, train_config))


def _array(obj: dict, name: str) -> np.ndarray:
    try:
        shape = tuple(obj[name]["shape"])
        data = obj[name]["data"]
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"checkpoint is missing weight array {name!r}") from exc
    arr = np.asarray(data, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise CheckpointError(f"weight array {name!r} does not match its declared shape")
    return arr.reshape(shape)


def load_checkpoint(data: bytes | str, embedder: Embedder | None = None) -> ClassifierModel:
    """Reconstruct a model; verifies checksum, version, and dimensions.

    A hashing-embedder checkpoint rebuilds its embedder from the stored descriptor.
    Remote-embedder checkpoints need the caller to pass an embedder whose
    identity matches. An explicitly passed embedder always must match.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint is not valid JSON: {exc.msg}") from None
    if not isinstance(payload, dict):
        raise CheckpointError("checkpoint must be a JSON object")

    stored_sum = payload.get("checksum")
    if not stored_sum:
        raise CheckpointError("checkpoint has no checksum")
    actual = _checksum({k: v for k, v in payload.items() if k != "checksum"})
    if actual != stored_sum:
        raise CheckpointError("checksum mismatch: checkpoint is corrupt")

    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {version!r}")

    stored = payload["embedder"]
    if embedder is None:
        if stored.get("kind") == "hashing":
            embedder = HashingEmbedder(dim=int(stored["dim"]), name=str(stored["name"]))
        else:
            raise CheckpointError(
                "checkpoint uses a remote embedder; pass a configured embedder to load it"
            )
    if embedder.identity != stored.get("identity"):
        raise CheckpointError(
            f"embedder identity {embedder.identity!r} does not match "
            f"checkpoint {stored.get('identity')!r}"
        )
    if embedder.dim != int(stored["dim"]):
        raise CheckpointError(
            f"embedder dim {embedder.dim} does not match checkpoint dim {stored['dim']}"
        )

    head_obj = payload["head"]
    weights = head_obj["weights"]
    head = HeadWeights(
        W1=_array(weights, "W1"),
        b1=_array(weights, "b1"),
        W2=_array(weights, "W2"),
        b2=_array(weights, "b2"),
        dropout_p=float(head_obj["dropout_p"]),
    )
    if head.input_dim != embedder.dim + 3:
        raise CheckpointError(
            f"head input width {head.input_dim} inconsistent with embedder dim {embedder.dim}"
        )
    scaler_obj = payload["scaler"]
    scaler = ScalerParams(median=tuple(scaler_obj["median"]), iqr=tuple(scaler_obj["iqr"]))
    return ClassifierModel(
        head=head,
        scaler=scaler,
        embedder=embedder,
        threshold=float(payload["threshold"]),
        version=str(payload["version"]),
    )


def load_checkpoint_file(path: str | Path, embedder: Embedder | None = None) -> ClassifierModel:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return load_checkpoint(raw, embedder)
