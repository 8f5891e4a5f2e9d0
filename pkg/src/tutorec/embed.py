"""Static word-embedding table with subword hashing for unknown tokens.

The table stands in for a contextual encoder: every downstream component
only needs per-token vectors, pooling, and cosine. Out-of-vocabulary tokens
are embedded as the mean of character-trigram hash-bucket vectors, which
gives fasttext-style subword behaviour without shipping binary models.
Contextual vectors produced elsewhere can be injected through
:class:`ExternalTokenVectors` (one vector per transcript token).
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import FormatError, Transcript

log = logging.getLogger(__name__)

DEFAULT_OOV_BUCKETS = 512


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]
    oov_buckets: int = DEFAULT_OOV_BUCKETS
    oov_seed: int = 0
    _buckets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("embedding dim must be >= 1")
        if self.oov_buckets < 1:
            raise ValueError("need at least one OOV bucket")
        rng = np.random.default_rng(self.oov_seed)
        buckets = rng.standard_normal((self.oov_buckets, self.dim))
        buckets /= np.linalg.norm(buckets, axis=1, keepdims=True)
        self._buckets = buckets

    def _bucket(self, piece: str) -> np.ndarray:
        return self._buckets[zlib.crc32(piece.encode("utf-8")) % self.oov_buckets]

    def embed_word(self, token: str) -> np.ndarray:
        """Stored vector for known tokens, trigram-hash mean otherwise.

        Tokens too short for a trigram hash as a single whole-token bucket.
        Deterministic for a fixed seed.
        """
        vec = self.vectors.get(token)
        if vec is not None:
            return vec
        if len(token) < 3:
            return self._bucket(token)
        pieces = [token[i:i + 3] for i in range(len(token) - 2)]
        return np.mean([self._bucket(p) for p in pieces], axis=0)

    def embed_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        """Stack per-token vectors into an ``(n, dim)`` array."""
        if not tokens:
            raise ValueError("cannot embed an empty token sequence")
        return np.stack([self.embed_word(t) for t in tokens])

    def token_vectors(self, transcript: Transcript) -> np.ndarray:
        return self.embed_tokens(transcript.tokens)


def load_embeddings(
    path: str | Path,
    oov_buckets: int = DEFAULT_OOV_BUCKETS,
    oov_seed: int = 0,
) -> EmbeddingTable:
    """Parse a text embedding file: ``token v1 v2 ... vd`` per line.

    The dimension is inferred from the first line; later lines must match.
    On duplicate tokens the last occurrence wins and a warning is logged.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dim == 0:
                dim = len(values)
                if dim == 0:
                    raise FormatError(f"{path}:{lineno}: no vector values on first line")
            if len(values) != dim:
                raise FormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(values)}"
                )
            try:
                vec = np.array([float(v) for v in values])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric vector value") from None
            if token in vectors:
                log.warning("duplicate embedding for %r at %s:%d, keeping last", token, path, lineno)
            vectors[token] = vec
    if not vectors:
        raise FormatError(f"{path}: empty embedding file")
    return EmbeddingTable(dim=dim, vectors=vectors, oov_buckets=oov_buckets, oov_seed=oov_seed)


def save_embeddings(path: str | Path, table: EmbeddingTable) -> None:
    """Inverse of :func:`load_embeddings`; values use full-precision repr."""
    with open(path, "w", encoding="utf-8") as fh:
        for token, vec in table.vectors.items():
            fh.write(token + " " + " ".join(repr(float(v)) for v in vec) + "\n")


@dataclass
class ExternalTokenVectors:
    """Precomputed per-token vectors keyed by transcript id.

    File format: ``transcript_id token_index v1 ... vd`` per line, with
    indices covering 0..n-1 for each transcript present.
    """

    dim: int
    by_transcript: dict[str, np.ndarray]

    def token_vectors(self, transcript: Transcript) -> np.ndarray:
        rows = self.by_transcript.get(transcript.id)
        if rows is None:
            raise KeyError(f"no external vectors for transcript {transcript.id!r}")
        if rows.shape[0] != transcript.num_tokens:
            raise ValueError(
                f"external vectors for {transcript.id!r} cover {rows.shape[0]} tokens, "
                f"transcript has {transcript.num_tokens}"
            )
        return rows


def load_token_vectors(path: str | Path) -> ExternalTokenVectors:
    entries: dict[str, dict[int, np.ndarray]] = {}
    dim = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise FormatError(f"{path}:{lineno}: expected id, index and values")
            tid, idx_raw, values = parts[0], parts[1], parts[2:]
            if dim == 0:
                dim = len(values)
            if len(values) != dim:
                raise FormatError(f"{path}:{lineno}: expected {dim} values, found {len(values)}")
            try:
                idx = int(idx_raw)
                vec = np.array([float(v) for v in values])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed index or value") from None
            entries.setdefault(tid, {})[idx] = vec
    if not entries:
        raise FormatError(f"{path}: empty token-vector file")
    by_transcript: dict[str, np.ndarray] = {}
    for tid, rows in entries.items():
        if sorted(rows) != list(range(len(rows))):
            raise FormatError(f"{path}: token indices for {tid!r} are not contiguous from 0")
        by_transcript[tid] = np.stack([rows[i] for i in range(len(rows))])
    return ExternalTokenVectors(dim=dim, by_transcript=by_transcript)


# ---------------------------------------------------------------------------
# pooling and similarity


def _as_matrix(vectors) -> np.ndarray:
    mat = np.asarray(vectors, dtype=float)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise ValueError("pooling needs a non-empty list of equal-length vectors")
    return mat


def pool_max(vectors) -> np.ndarray:
    """Elementwise maximum over a non-empty collection of vectors."""
    return _as_matrix(vectors).max(axis=0)


def pool_mean(vectors) -> np.ndarray:
    """Arithmetic mean over a non-empty collection of vectors."""
    return _as_matrix(vectors).mean(axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; 0 when either vector has zero norm."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"cosine shape mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
