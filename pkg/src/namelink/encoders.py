"""Deterministic text encoders and model-input assembly.

Two self-contained encoders stand in for pretrained embedding models so the
pipeline runs with no model-weight downloads:

* a character n-gram hashing encoder for author names (200 dims), which puts
  similarly spelled names close together, and
* a token hashing encoder for titles/sources (768 dims).

Both hash with BLAKE2b so the vectors are identical across runs, platforms
and processes.  Real pretrained vectors can be injected through
:class:`TableEncoder`, a key->vector table with built-in fallback on misses.

The classifier's two inputs are assembled from these encoders: input one is
the target's first-name vector concatenated with the mean of two co-author
name vectors (400 dims); input two is the mean of the title and source
vectors (768 dims).
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

NAME_DIM = 200
TEXT_DIM = 768

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _signed_bucket(data: str, n_buckets: int) -> tuple[int, float]:
    """Fixed (bucket, sign) for a string: low hash bits pick the bucket, a
    high bit picks the sign."""
    digest = hashlib.blake2b(data.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "little")
    bucket = value % n_buckets
    sign = 1.0 if (value >> 63) & 1 else -1.0
    return bucket, sign


def _finalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    vec.flags.writeable = False
    return vec


class HashingNameEncoder:
    """Character n-gram (n=1..3) hashing into 200 signed buckets.

    Words are wrapped in boundary markers before n-gram extraction and the
    input is lowercased, so "J Lee" and "j lee" encode identically.  Output
    has unit L2 norm; the empty string maps to the zero vector.
    """

    dim = NAME_DIM

    def __init__(self, cache_size: int = 1 << 17):
        self._cache: dict[str, np.ndarray] = {}
        self._cache_size = cache_size

    def __call__(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        vec = self._encode(text)
        if len(self._cache) < self._cache_size:
            self._cache[text] = vec
        return vec

    def _encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        words = text.lower().split()
        if not words:
            _finalize(vec)
            return vec
        counts: dict[str, int] = {}
        for word in words:
            marked = f"^{word}$"
            for n in (1, 2, 3):
                for i in range(len(marked) - n + 1):
                    gram = marked[i : i + n]
                    counts[gram] = counts.get(gram, 0) + 1
        for gram, count in counts.items():
            bucket, sign = _signed_bucket(gram, self.dim)
            vec[bucket] += sign * count
        return _finalize(vec)


class HashingTextEncoder:
    """Token hashing into 768 signed buckets with mean pooling.

    Lowercases, splits on non-alphanumerics, maps each token occurrence to
    one signed bucket, averages over tokens and L2-normalizes.  Blank text
    maps to the zero vector.  Pooling makes the vector order-insensitive.
    """

    dim = TEXT_DIM

    def __init__(self, cache_size: int = 1 << 17):
        self._cache: dict[str, np.ndarray] = {}
        self._cache_size = cache_size

    def __call__(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        vec = self._encode(text)
        if len(self._cache) < self._cache_size:
            self._cache[text] = vec
        return vec

    def _encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            _finalize(vec)
            return vec
        for token in tokens:
            bucket, sign = _signed_bucket(token, self.dim)
            vec[bucket] += sign
        vec /= len(tokens)
        return _finalize(vec)


class EmbeddingTableError(Exception):
    pass


class TableEncoder:
    """Exact-key lookup into a precomputed embedding table, falling back to a
    built-in encoder on misses (counted in ``miss_count``)."""

    def __init__(self, table: dict[str, np.ndarray], fallback: Callable[[str], np.ndarray], dim: int):
        self.dim = dim
        self._table = table
        self._fallback = fallback
        self.miss_count = 0

    def __call__(self, text: str) -> np.ndarray:
        vec = self._table.get(text)
        if vec is None:
            self.miss_count += 1
            return self._fallback(text)
        return vec


def load_embedding_table(
    path: str | Path, expected_dim: int, fallback: Callable[[str], np.ndarray]
) -> TableEncoder:
    """Load a "key<TAB>v1 v2 ... vd" table; every line must carry exactly
    ``expected_dim`` values and keys must be unique."""
    path = Path(path)
    table: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            key, sep, values = line.partition("\t")
            if not sep:
                raise EmbeddingTableError(f"{path}:{line_no}: missing tab separator")
            if key in table:
                raise EmbeddingTableError(f"{path}:{line_no}: duplicate key {key!r}")
            parts = values.split()
            if len(parts) != expected_dim:
                raise EmbeddingTableError(
                    f"{path}:{line_no}: expected {expected_dim} values, found {len(parts)}"
                )
            try:
                vec = np.array([float(p) for p in parts])
            except ValueError as exc:
                raise EmbeddingTableError(f"{path}:{line_no}: bad value: {exc}") from exc
            if not np.isfinite(vec).all():
                raise EmbeddingTableError(f"{path}:{line_no}: non-finite value")
            vec.flags.writeable = False
            table[key] = vec
    return TableEncoder(table, fallback, expected_dim)


class Encoders(NamedTuple):
    """The name and text encoders a pipeline stage works with."""

    name: Callable[[str], np.ndarray]
    text: Callable[[str], np.ndarray]


def default_encoders() -> Encoders:
    return Encoders(name=HashingNameEncoder(), text=HashingTextEncoder())


@dataclass(frozen=True)
class FeatureVectorPair:
    """The classifier's two inputs: 400 name dims and 768 text dims."""

    x1: np.ndarray
    x2: np.ndarray


def assemble_features(
    target_first_name: str,
    coauthor_p: str,
    coauthor_j: str,
    title: str,
    source: str,
    name_encoder: Callable[[str], np.ndarray],
    text_encoder: Callable[[str], np.ndarray],
) -> FeatureVectorPair:
    """Build the two model inputs for one sample.

    x1 = name(first name) ++ (name(p) + name(j)) / 2, x2 = (text(title) +
    text(source)) / 2.  Missing co-author slots are passed as empty strings
    and contribute zero vectors; an empty source likewise halves the title
    signal rather than renormalizing.
    """
    target_vec = np.asarray(name_encoder(target_first_name))
    p_vec = np.asarray(name_encoder(coauthor_p))
    j_vec = np.asarray(name_encoder(coauthor_j))
    x1 = np.concatenate([target_vec, 0.5 * (p_vec + j_vec)])
    x2 = 0.5 * (np.asarray(text_encoder(title)) + np.asarray(text_encoder(source)))
    return FeatureVectorPair(x1=x1, x2=x2)
