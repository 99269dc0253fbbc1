"""Similarity kernels: edit distance, common-subsequence ratio, cosine.

The default cosine backend is a deterministic bag of code tokens so the
whole suite runs hermetically; a remote embedding backend speaks a small
HTTP protocol for callers who want model-based similarity.
"""

from __future__ import annotations

import hashlib
import math
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

import requests

from .syntax import tokenize


class SimilarityError(RuntimeError):
    """A similarity backend failed; the caller decides on fallback."""


def lev_similarity(a: str, b: str) -> float:
    """1 - normalized Levenshtein distance; 1.0 for identical strings."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    prev = list(range(len(b) + 1))
    cur = [0] * (len(b) + 1)
    for i, ca in enumerate(a, 1):
        cur[0] = i
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return 1.0 - prev[len(b)] / max(len(a), len(b))


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Length of the longest common subsequence of two sequences."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def lcs_ratio(a: Sequence, b: Sequence) -> float:
    """2 * |longest common subsequence| / (|a| + |b|); empty vs empty is 1."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return 2.0 * lcs_length(a, b) / (len(a) + len(b))


@dataclass(frozen=True)
class SparseTokenVector:
    """Non-negative token counts; the deterministic embedding stand-in."""

    counts: dict[str, int]

    @classmethod
    def from_code(cls, text: str) -> "SparseTokenVector":
        tokens = [
            t.lexeme
            for t in tokenize(text)
            if t.kind not in ("whitespace", "comment")
        ]
        return cls(counts=dict(Counter(tokens)))

    def cosine(self, other: "SparseTokenVector") -> float:
        if self.counts == other.counts:
            return 1.0  # covers the empty/empty convention too
        if not self.counts or not other.counts:
            return 0.0
        dot = sum(n * other.counts.get(tok, 0) for tok, n in self.counts.items())
        sq_a = sum(n * n for n in self.counts.values())
        sq_b = sum(n * n for n in other.counts.values())
        return dot / math.sqrt(sq_a * sq_b)


class SimilarityBackend(Protocol):
    """Scores two code texts in [0, 1]."""

    def similarity(self, a: str, b: str) -> float: ...


class BagOfTokensBackend:
    """Cosine over bags of code tokens (comments and whitespace excluded)."""

    kind = "bag_of_tokens"

    def __init__(self) -> None:
        self._cache: dict[str, SparseTokenVector] = {}
        self._lock = threading.Lock()

    def _vector(self, text: str) -> SparseTokenVector:
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        with self._lock:
            vec = self._cache.get(key)
        if vec is None:
            vec = SparseTokenVector.from_code(text)
            with self._lock:
                self._cache[key] = vec
        return vec

    def similarity(self, a: str, b: str) -> float:
        return _clamp01(self._vector(a).cosine(self._vector(b)))


class RemoteEmbeddingBackend:
    """HTTP embedding service client with per-text caching.

    Protocol: POST {endpoint}/embed with ``{"model": id, "text": code}``;
    the response must be ``{"vector": [..]}``.  Any non-200 status or
    malformed body raises :class:`SimilarityError` - never a silent zero.
    """

    kind = "remote_embedding"

    def __init__(self, endpoint: str, model_id: str, timeout: float = 30.0) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.timeout = timeout
        self._session = requests.Session()
        self._cache: dict[str, list[float]] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> list[float]:
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        try:
            resp = self._session.post(
                f"{self.endpoint}/embed",
                json={"model": self.model_id, "text": text},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise SimilarityError(f"embedding request failed: {exc}") from exc
        if resp.status_code != 200:
            raise SimilarityError(
                f"embedding service returned HTTP {resp.status_code}"
            )
        try:
            vector = resp.json()["vector"]
        except (ValueError, KeyError, TypeError) as exc:
            raise SimilarityError("malformed embedding response") from exc
        if not isinstance(vector, list) or not vector:
            raise SimilarityError("malformed embedding response: empty vector")
        vec = [float(x) for x in vector]
        with self._lock:
            self._cache[key] = vec
        return vec

    def similarity(self, a: str, b: str) -> float:
        va, vb = self.embed(a), self.embed(b)
        if len(va) != len(vb):
            raise SimilarityError("embedding dimensions differ between texts")
        sq_a = sum(x * x for x in va)
        sq_b = sum(x * x for x in vb)
        if sq_a == 0.0 or sq_b == 0.0:
            raise SimilarityError("embedding service returned a zero vector")
        if va == vb:
            return 1.0
        dot = sum(x * y for x, y in zip(va, vb))
        return _clamp01(dot / math.sqrt(sq_a * sq_b))


class FallbackBackend:
    """Delegates to a primary backend, falling back on similarity errors."""

    kind = "fallback"

    def __init__(self, primary: SimilarityBackend, secondary: SimilarityBackend) -> None:
        self.primary = primary
        self.secondary = secondary

    def similarity(self, a: str, b: str) -> float:
        try:
            return self.primary.similarity(a, b)
        except SimilarityError:
            return self.secondary.similarity(a, b)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def context_cosine(a: str, b: str, backend: SimilarityBackend | None = None) -> float:
    """Cosine similarity of two code snippets in [0, 1]."""
    if backend is None:
        backend = BagOfTokensBackend()
    return backend.similarity(a, b)
