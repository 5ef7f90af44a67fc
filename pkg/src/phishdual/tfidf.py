"""Character n-gram TF-IDF vectorization of URLs.

Weights use raw term counts and smoothed IDF ``ln((1 + N) / (1 + df)) + 1``,
followed by optional L2 normalization.  Vocabulary columns are assigned in
lexicographic gram order, so a fitted model does not depend on corpus order.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ModelFormatError

FORMAT_VERSION = 1
NORMS = ("l2", "none")


def extract_char_ngrams(s: str, n_min: int = 2, n_max: int = 6) -> Counter:
    """All contiguous substrings with length in ``[n_min, n_max]``, counted."""
    if not 1 <= n_min <= n_max:
        raise ValueError(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}")
    grams = Counter()
    length = len(s)
    for n in range(n_min, min(n_max, length) + 1):
        grams.update(s[i:i + n] for i in range(length - n + 1))
    return grams


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.indices.shape != self.values.shape or self.indices.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")

    @property
    def nnz(self):
        return int(self.indices.size)

    def dot(self, other: "SparseVector") -> float:
        common, ia, ib = np.intersect1d(self.indices, other.indices, assume_unique=True, return_indices=True)
        return float(np.dot(self.values[ia], other.values[ib]))

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.indices] = self.values
        return out

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class Vocabulary:
    grams: tuple[str, ...]
    document_frequency: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_index", {g: i for i, g in enumerate(self.grams)})

    @property
    def gram_to_index(self) -> dict[str, int]:
        return self._index

    def __len__(self):
        return len(self.grams)

    def get(self, gram, default=None):
        return self._index.get(gram, default)


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Vocabulary
    idf: np.ndarray
    n_min: int = 2
    n_max: int = 6
    norm: str = "l2"
    fitted_doc_count: int = 0

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)

    def transform(self, s: str) -> SparseVector:
        return transform(self, s)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "norm": self.norm,
            "fitted_doc_count": self.fitted_doc_count,
            "grams": [
                [g, i, int(df), float(idf)]
                for i, (g, df, idf) in enumerate(
                    zip(self.vocabulary.grams, self.vocabulary.document_frequency, self.idf)
                )
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TfidfModel":
        if data.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported tfidf format_version {data.get('format_version')!r}")
        rows = data["grams"]
        for expected, row in enumerate(rows):
            if row[1] != expected:
                raise ModelFormatError(f"gram {row[0]!r} has index {row[1]}, expected {expected}")
        grams = tuple(r[0] for r in rows)
        if list(grams) != sorted(grams):
            raise ModelFormatError("grams must be sorted")
        vocab = Vocabulary(grams, np.array([r[2] for r in rows], dtype=np.int64))
        return cls(
            vocabulary=vocab,
            idf=np.array([r[3] for r in rows], dtype=np.float64),
            n_min=int(data["n_min"]),
            n_max=int(data["n_max"]),
            norm=data["norm"],
            fitted_doc_count=int(data["fitted_doc_count"]),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TfidfModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit(corpus: Sequence[str], n_min: int = 2, n_max: int = 6, norm: str = "l2", min_df: int = 1) -> TfidfModel:
    if len(corpus) == 0:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    if norm not in NORMS:
        raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")
    df = Counter()
    for doc in corpus:
        df.update(extract_char_ngrams(doc, n_min, n_max).keys())
    grams = tuple(sorted(g for g, c in df.items() if c >= min_df))
    counts = np.array([df[g] for g in grams], dtype=np.int64)
    n_docs = len(corpus)
    idf = np.array([math.log((1 + n_docs) / (1 + c)) + 1.0 for c in counts.tolist()], dtype=np.float64)
    return TfidfModel(Vocabulary(grams, counts), idf, n_min, n_max, norm, n_docs)


def _weights(model: TfidfModel, s: str):
    counts = extract_char_ngrams(s, model.n_min, model.n_max)
    index = model.vocabulary.gram_to_index
    pairs = sorted((index[g], c) for g, c in counts.items() if g in index)
    if not pairs:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    cols = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
    tf = np.fromiter((p[1] for p in pairs), dtype=np.float64, count=len(pairs))
    values = tf * model.idf[cols]
    if model.norm == "l2":
        values = values / np.sqrt(np.dot(values, values))
    return cols, values


def transform(model: TfidfModel, s: str) -> SparseVector:
    """TF-IDF vector of ``s``; grams outside the vocabulary are ignored."""
    cols, values = _weights(model, s)
    return SparseVector(cols, values)


def transform_many(model: TfidfModel, docs: Iterable[str]) -> sp.csr_matrix:
    """Row-stacked :func:`transform` results as a CSR matrix."""
    indptr = [0]
    indices = []
    data = []
    for doc in docs:
        cols, values = _weights(model, doc)
        indices.append(cols)
        data.append(values)
        indptr.append(indptr[-1] + cols.size)
    n_rows = len(indptr) - 1
    return sp.csr_matrix(
        (
            np.concatenate(data) if data else np.empty(0),
            np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
            np.array(indptr, dtype=np.int64),
        ),
        shape=(n_rows, model.n_features),
    )


def vectors_to_csr(vectors: Sequence[SparseVector], n_features: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        if v.nnz and (v.indices.max() >= n_features or v.indices.min() < 0):
            raise ValueError(f"vector {i} has a feature index outside [0, {n_features})")
        indptr[i + 1] = indptr[i] + v.nnz
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.empty(0, dtype=np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.empty(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), n_features))
