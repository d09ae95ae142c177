"""TF-IDF vocabulary fitting and sparse document vectors.

IDF uses the smoothed form ``ln((1 + N) / (1 + df)) + 1`` which is strictly
positive. Terms are indexed in sorted order so that a fit does not depend on
document order.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyInput, LengthMismatch, NoTargetSamples


@dataclass(frozen=True)
class TfidfConfig:
    min_df: int = 1
    sublinear_tf: bool = False
    l2_normalize: bool = True

    def to_dict(self):
        return {"min_df": self.min_df, "sublinear_tf": self.sublinear_tf,
                "l2_normalize": self.l2_normalize}


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple
    doc_freq: tuple
    n_docs: int
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def as_dict(self, vocab: Vocabulary | None = None) -> dict:
        keys = self.indices.tolist() if vocab is None else [vocab.terms[i] for i in self.indices]
        return dict(zip(keys, self.values.tolist()))

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


@dataclass(frozen=True)
class TfidfModel:
    vocab: Vocabulary
    idf: np.ndarray
    config: TfidfConfig

    @property
    def n_features(self) -> int:
        return len(self.vocab)

    @property
    def terms(self) -> tuple:
        return self.vocab.terms

    def to_json(self) -> str:
        return json.dumps({
            "terms": list(self.vocab.terms),
            "doc_freq": list(self.vocab.doc_freq),
            "n_docs": self.vocab.n_docs,
            "config": self.config.to_dict(),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TfidfModel":
        d = json.loads(text)
        vocab = Vocabulary(tuple(d["terms"]), tuple(d["doc_freq"]), d["n_docs"])
        return cls(vocab, _idf(vocab), TfidfConfig(**d["config"]))


def _idf(vocab: Vocabulary) -> np.ndarray:
    df = np.asarray(vocab.doc_freq, dtype=float)
    return np.log((1.0 + vocab.n_docs) / (1.0 + df)) + 1.0


def fit(docs: Sequence[Sequence[str]], config: TfidfConfig = TfidfConfig()) -> TfidfModel:
    if len(docs) == 0:
        raise EmptyInput("cannot fit TF-IDF on zero documents")
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    terms = tuple(sorted(t for t, c in df.items() if c >= config.min_df))
    vocab = Vocabulary(terms, tuple(df[t] for t in terms), len(docs))
    return TfidfModel(vocab, _idf(vocab), config)


def transform(model: TfidfModel, doc: Sequence[str]) -> SparseVector:
    counts = Counter(t for t in doc if t in model.vocab.index)
    if not counts:
        return SparseVector(np.zeros(0, dtype=np.int64), np.zeros(0), model.n_features)
    idx = np.array(sorted(model.vocab.index[t] for t in counts), dtype=np.int64)
    tf = np.array([counts[model.vocab.terms[i]] for i in idx], dtype=float)
    if model.config.sublinear_tf:
        tf = 1.0 + np.log(tf)
    values = tf * model.idf[idx]
    if model.config.l2_normalize:
        values = values / math.sqrt(float(np.dot(values, values)))
    return SparseVector(idx, values, model.n_features)


def stack(vectors: Sequence[SparseVector], dim: int | None = None) -> sp.csr_matrix:
    """Row-stack sparse vectors into a CSR matrix."""
    if dim is None:
        if not vectors:
            raise EmptyInput("cannot infer dimension of an empty stack")
        dim = vectors[0].dim
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v.indices) for v in vectors])
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def transform_many(model: TfidfModel, docs: Sequence[Sequence[str]]) -> sp.csr_matrix:
    return stack([transform(model, d) for d in docs], model.n_features)


def _as_csr(vectors) -> sp.csr_matrix:
    if sp.issparse(vectors):
        return sp.csr_matrix(vectors)
    if isinstance(vectors, np.ndarray):
        return sp.csr_matrix(vectors)
    return stack(list(vectors))


def mean_tfidf_by_class(vectors, labels, target) -> np.ndarray:
    """Per-feature arithmetic mean over the rows labelled ``target``."""
    X = _as_csr(vectors)
    labels = np.asarray([int(l) for l in labels])
    if X.shape[0] != len(labels):
        raise LengthMismatch(f"{X.shape[0]} vectors but {len(labels)} labels")
    mask = labels == int(target)
    if not mask.any():
        raise NoTargetSamples(f"no samples labelled {target!r}")
    return np.asarray(X[mask].mean(axis=0)).ravel()
