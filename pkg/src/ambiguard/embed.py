"""Text-to-vector embedders behind one small protocol.

The hashing embedder is the offline default: character trigrams are
feature-hashed into D signed buckets and L2-normalized. It is deterministic
per (identity, text), which the classifier relies on for reproducible
training. The remote embedder speaks {texts: [...]} -> {vectors: [[...]]}
over HTTP.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

EMBED_TOKEN_ENV = "AMBIGUARD_EMBED_TOKEN"


class EmbedderError(RuntimeError):
    """Embedding failed; `retryable` distinguishes transient transport faults."""

    def __init__(self, message: str, *, retryable: bool) -> None:
        super().__init__(message)
        self.retryable = retryable


@runtime_checkable
class Embedder(Protocol):
    identity: str
    dim: int

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return an (n, dim) float64 array of unit-norm rows."""
        ...


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


@dataclass(frozen=True)
class HashingEmbedder:
    """Character-trigram feature hashing, keyed by identity for stability."""

    dim: int = 768
    name: str = "hashing-trigram-v1"
    identity: str = field(init=False)

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        object.__setattr__(self, "identity", f"{self.name}:{self.dim}")

    def _key(self) -> bytes:
        # blake2b keys cap at 64 bytes; digest the identity down to 32.
        return hashlib.sha256(self.identity.encode("utf-8")).digest()

    def _embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        padded = f"\x02{text.lower()}\x03"
        key = self._key()
        for i in range(len(padded) - 2):
            digest = hashlib.blake2b(
                padded[i : i + 3].encode("utf-8"), key=key, digest_size=8
            ).digest()
            h = int.from_bytes(digest, "big")
            sign = 1.0 if h & (1 << 63) else -1.0
            vec[(h >> 1) % self.dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if any(not t for t in texts):
            raise ValueError("cannot embed empty text")
        return np.stack([self._embed_one(t) for t in texts]) if texts else np.zeros((0, self.dim))


class RemoteEmbedder:
    """Client for an embedding service; auth token read from the environment."""

    def __init__(
        self,
        url: str,
        identity: str,
        dim: int,
        timeout: float = 10.0,
        max_inflight: int = 4,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        if dim <= 0:
            raise ValueError("dim must be positive")
        if max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        self.url = url
        self.identity = identity
        self.dim = dim
        self._gate = threading.Semaphore(max_inflight)
        headers = {}
        token = os.environ.get(EMBED_TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if any(not t for t in texts):
            raise ValueError("cannot embed empty text")
        if not texts:
            return np.zeros((0, self.dim))
        try:
            with self._gate:
                response = self._client.post(self.url, json={"texts": list(texts)})
        except httpx.TimeoutException as exc:
            raise EmbedderError(f"embedding request timed out: {exc}", retryable=True) from exc
        except httpx.HTTPError as exc:
            raise EmbedderError(f"embedding transport failure: {exc}", retryable=True) from exc
        if response.status_code != 200:
            raise EmbedderError(
                f"embedding service returned {response.status_code}",
                retryable=response.status_code >= 500,
            )
        vectors = response.json().get("vectors")
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape != (len(texts), self.dim):
            got = matrix.shape if matrix.ndim == 2 else "malformed"
            raise EmbedderError(
                f"embedding dimension mismatch: expected ({len(texts)}, {self.dim}), got {got}",
                retryable=False,
            )
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return matrix / norms

    def close(self) -> None:
        self._client.close()
