"""Emotion keyword extraction from differential TF-IDF and SHAP importance."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .corpus import EmotionLabel
from .errors import ConfigError, EmptyAfterFilter, NoComplementSamples, VocabularyMismatch
from .shap import GlobalImportance
from .tfidf import _as_csr, mean_tfidf_by_class

MAX_K = 50


@dataclass(frozen=True)
class DifferentialScore:
    term: str
    score: float
    shap_importance: float | None = None


@dataclass(frozen=True)
class ImportancePolicy:
    """Survivors need importance >= the given percentile of the class's
    non-zero importances, or >= ``threshold`` when that is set."""

    percentile: float = 50.0
    threshold: float | None = None


@dataclass
class KeywordSet:
    emotion: EmotionLabel | None
    positive: list
    negative: list
    threshold_used: float
    k_pos: int
    k_neg: int
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "emotion": None if self.emotion is None else self.emotion.name,
            "positive": list(self.positive),
            "negative": list(self.negative),
            "threshold_used": None if not math.isfinite(self.threshold_used) else self.threshold_used,
            "k_pos": self.k_pos,
            "k_neg": self.k_neg,
            "provenance": dict(self.provenance),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        thr = d.get("threshold_used")
        return cls(
            emotion=None if d.get("emotion") is None else EmotionLabel.parse(d["emotion"]),
            positive=list(d["positive"]),
            negative=list(d["negative"]),
            threshold_used=float("nan") if thr is None else float(thr),
            k_pos=d["k_pos"],
            k_neg=d["k_neg"],
            provenance=dict(d.get("provenance", {})),
        )


def differential_scores(vectors, labels, target, terms: Sequence[str] | None = None
                        ) -> list[DifferentialScore]:
    """Target-class mean TF-IDF minus the pooled mean of every other class."""
    X = _as_csr(vectors)
    lab = np.asarray([int(l) for l in labels])
    target_mean = mean_tfidf_by_class(X, lab, target)
    rest = lab != int(target)
    if not rest.any():
        raise NoComplementSamples(f"no samples outside {target!r}")
    rest_mean = np.asarray(X[rest].mean(axis=0)).ravel()
    diff = target_mean - rest_mean
    if terms is None:
        terms = [str(i) for i in range(X.shape[1])]
    if len(terms) != X.shape[1]:
        raise VocabularyMismatch(f"{len(terms)} terms for {X.shape[1]} features")
    return [DifferentialScore(t, float(s)) for t, s in zip(terms, diff)]


def importance_threshold(importance: GlobalImportance, target, policy=ImportancePolicy()) -> float:
    if policy.threshold is not None:
        return float(policy.threshold)
    row = importance.for_class(target)
    nz = row[row > 0]
    if len(nz) == 0:
        return math.inf
    return float(np.percentile(nz, policy.percentile))


def filter_by_importance(scores, importance: GlobalImportance, target,
                         policy: ImportancePolicy = ImportancePolicy()) -> list[DifferentialScore]:
    """Drop terms the classifier does not rely on for ``target``.

    Terms with zero importance never survive, whatever the threshold.
    """
    row = importance.for_class(target)
    if importance.terms is not None:
        if len(importance.terms) != len(row):
            raise VocabularyMismatch("importance terms and matrix disagree")
        index = {t: i for i, t in enumerate(importance.terms)}
    else:
        index = None
    tau = importance_threshold(importance, target, policy)
    out = []
    for s in scores:
        if index is not None:
            if s.term not in index:
                raise VocabularyMismatch(f"term {s.term!r} unknown to the importance model")
            j = index[s.term]
        else:
            try:
                j = int(s.term)
            except ValueError:
                raise VocabularyMismatch(f"term {s.term!r} needs importance terms") from None
            if not 0 <= j < len(row):
                raise VocabularyMismatch(f"feature {j} out of range")
        imp = float(row[j])
        if imp > 0 and imp >= tau:
            out.append(replace(s, shap_importance=imp))
    return out


def split_keywords(filtered, k_pos: int, k_neg: int, emotion=None,
                   threshold_used: float = math.nan) -> KeywordSet:
    """Top ``k_pos`` by descending score and bottom ``k_neg`` by ascending score.

    Ties break on the term string, and a term eligible for both lists stays
    in ``positive``.
    """
    if not 0 <= k_pos <= MAX_K or not 0 <= k_neg <= MAX_K:
        raise ConfigError(f"k_pos and k_neg must lie in [0, {MAX_K}]")
    if not filtered:
        raise EmptyAfterFilter("no terms survived the importance filter")
    by_desc = sorted(filtered, key=lambda s: (-s.score, s.term))
    positive = [s.term for s in by_desc[:k_pos]]
    taken = set(positive)
    by_asc = sorted(filtered, key=lambda s: (s.score, s.term))
    negative = [s.term for s in by_asc if s.term not in taken][:k_neg]
    emo = None if emotion is None else EmotionLabel.parse(emotion)
    return KeywordSet(emo, positive, negative, float(threshold_used), k_pos, k_neg)


def extract_keywords(vectors, labels, importance: GlobalImportance, target, terms,
                     k_pos: int = 5, k_neg: int = 5,
                     policy: ImportancePolicy = ImportancePolicy(),
                     provenance: dict | None = None) -> KeywordSet:
    """Full per-emotion chain: differential scores, SHAP filter, ranked split."""
    scores = differential_scores(vectors, labels, target, terms)
    filtered = filter_by_importance(scores, importance, target, policy)
    ks = split_keywords(filtered, k_pos, k_neg, emotion=target,
                        threshold_used=importance_threshold(importance, target, policy))
    ks.provenance = dict(provenance or {})
    return ks
