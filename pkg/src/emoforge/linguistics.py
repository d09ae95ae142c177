"""Lexical and syntactic diversity of real versus synthetic text.

Metrics: type-token ratio, Jaccard overlap of vocabularies, and the base-2
Jensen-Shannon divergence between POS n-gram distributions.
"""
from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._lexicon import LEXICON, LY_EXCEPTIONS, SUFFIX_RULES
from .corpus import EMOTIONS, Corpus, PreprocessConfig, preprocess
from .errors import ArityMismatch, BothEmpty, EmptyInput, NoNgrams

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "AUX", "DET", "ADP", "PART", "NUM",
            "PROPN", "INTJ", "CONJ", "PUNCT", "SYM", "X")


def ttr(tokens: Sequence[str]) -> float:
    if len(tokens) == 0:
        raise EmptyInput("type-token ratio of an empty token list")
    return len(set(tokens)) / len(tokens)


def jaccard(a: Iterable, b: Iterable) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        raise BothEmpty("Jaccard index of two empty sets")
    return len(a & b) / len(union)


def _tag_one(tok: str) -> str:
    if tok in LEXICON:
        return LEXICON[tok]
    if not tok:
        return "X"
    if tok.isdigit() or tok.replace(".", "", 1).isdigit():
        return "NUM"
    if not any(ch.isalnum() for ch in tok):
        return "PUNCT"
    if tok.endswith("ly") and tok in LY_EXCEPTIONS:
        return LY_EXCEPTIONS[tok]
    for suffix, tag in SUFFIX_RULES:
        if tok.endswith(suffix) and len(tok) > len(suffix) + 2:
            return tag
    if any(ch.isdigit() for ch in tok):
        return "X"
    return "NOUN"


def pos_tag(tokens: Sequence[str]) -> list[str]:
    """Universal POS tags from a closed-class lexicon plus suffix rules."""
    return [_tag_one(t.lower()) for t in tokens]


@dataclass
class NgramDistribution:
    n: int
    counts: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def probabilities(self) -> dict:
        total = self.total
        return {k: v / total for k, v in self.counts.items()} if total else {}

    def top(self, k: int = 20) -> list[tuple[tuple, float]]:
        probs = self.probabilities
        return sorted(probs.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def ngram_distribution(tags, n: int) -> NgramDistribution:
    """Count consecutive tag n-grams inside each document.

    ``tags`` is one tag sequence or a list of per-document sequences; n-grams
    never straddle documents.
    """
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    docs = [tags] if tags and isinstance(tags[0], str) else list(tags)
    counts = Counter()
    for doc in docs:
        for i in range(len(doc) - n + 1):
            counts[tuple(doc[i:i + n])] += 1
    if not counts:
        raise NoNgrams(f"no {n}-grams in input")
    return NgramDistribution(n, dict(counts))


def _kl2(p: np.ndarray, m: np.ndarray) -> float:
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / m[nz])))


def jsd(P, Q) -> float:
    """Base-2 Jensen-Shannon divergence (range [0, 1]).

    Accepts two NgramDistributions (supports unioned, missing mass = 0) or two
    aligned probability vectors.
    """
    if isinstance(P, NgramDistribution) or isinstance(Q, NgramDistribution):
        if not (isinstance(P, NgramDistribution) and isinstance(Q, NgramDistribution)):
            raise ArityMismatch("cannot compare a distribution with a bare vector")
        if P.n != Q.n:
            raise ArityMismatch(f"{P.n}-grams vs {Q.n}-grams")
        pp, qp = P.probabilities, Q.probabilities
        support = sorted(set(pp) | set(qp))
        p = np.array([pp.get(k, 0.0) for k in support])
        q = np.array([qp.get(k, 0.0) for k in support])
    else:
        p, q = np.asarray(P, dtype=float), np.asarray(Q, dtype=float)
        if p.shape != q.shape:
            raise ArityMismatch("probability vectors differ in length")
    m = 0.5 * (p + q)
    return 0.5 * _kl2(p, m) + 0.5 * _kl2(q, m)


# ---------------------------------------------------------------------------
# report


@dataclass
class DiversityReport:
    ttr_per_dataset: dict
    jaccard_per_emotion: dict  # (emotion name, variant) -> value
    jsd_bigram: dict
    jsd_trigram: dict
    top_ngrams: dict  # dataset -> {2: [...], 3: [...]}
    distributions: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "ttr": dict(self.ttr_per_dataset),
            "jaccard": {f"{e}/{v}": x for (e, v), x in sorted(self.jaccard_per_emotion.items())},
            "jsd_bigram": dict(self.jsd_bigram),
            "jsd_trigram": dict(self.jsd_trigram),
            "top_ngrams": {
                ds: {str(n): [[list(g), p] for g, p in rows] for n, rows in per.items()}
                for ds, per in self.top_ngrams.items()
            },
        }

    def rows(self) -> list[tuple]:
        """Flat (metric, dataset, emotion, value) rows."""
        out = [("ttr", ds, "", v) for ds, v in self.ttr_per_dataset.items()]
        out += [("jaccard", v, e, x) for (e, v), x in sorted(self.jaccard_per_emotion.items())]
        out += [("jsd_bigram", v, "", x) for v, x in self.jsd_bigram.items()]
        out += [("jsd_trigram", v, "", x) for v, x in self.jsd_trigram.items()]
        return out


def _tokens(corpus: Corpus, config: PreprocessConfig) -> list[list[str]]:
    return [preprocess(s.text, config) for s in corpus]


def diversity_report(real: Corpus, shap_synth: Corpus | None, naive_synth: Corpus | None,
                     config: PreprocessConfig = PreprocessConfig(), top_k: int = 20,
                     extra: dict | None = None) -> DiversityReport:
    """Compare each synthetic corpus against the real one.

    ``extra`` may add further named synthetic corpora (e.g. the no-exemplar
    ablation variant).
    """
    datasets = {"real": real}
    if shap_synth is not None:
        datasets["shap_guided"] = shap_synth
    if naive_synth is not None:
        datasets["naive"] = naive_synth
    datasets.update(extra or {})

    docs = {name: _tokens(c, config) for name, c in datasets.items()}
    tags = {name: [pos_tag(d) for d in ds] for name, ds in docs.items()}

    ttr_vals = {name: ttr([t for d in ds for t in d]) for name, ds in docs.items()}

    def vocab(name, emotion):
        return {t for s, d in zip(datasets[name], docs[name]) if s.label == emotion for t in d}

    jac = {}
    for name in datasets:
        if name == "real":
            continue
        for e in EMOTIONS:
            a, b = vocab("real", e), vocab(name, e)
            if a or b:
                jac[(e.name, name)] = jaccard(a, b)

    dists = {name: {n: ngram_distribution(tg, n) for n in (2, 3)} for name, tg in tags.items()}
    jsd2 = {name: jsd(dists["real"][2], dists[name][2]) for name in datasets if name != "real"}
    jsd3 = {name: jsd(dists["real"][3], dists[name][3]) for name in datasets if name != "real"}
    top = {name: {n: dists[name][n].top(top_k) for n in (2, 3)} for name in datasets}
    return DiversityReport(ttr_vals, jac, jsd2, jsd3, top, dists)


def write_report(report: DiversityReport, out_dir, figures: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / "diversity.json"
    p.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)
    p = out_dir / "diversity.csv"
    with open(p, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["metric", "dataset", "emotion", "value"])
        for metric, ds, emo, v in report.rows():
            w.writerow([metric, ds, emo, repr(float(v))])
    written.append(p)
    for n in (2, 3):
        p = out_dir / f"top_{'bi' if n == 2 else 'tri'}grams.csv"
        with open(p, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["dataset", "rank", "ngram", "probability"])
            for ds, per in report.top_ngrams.items():
                for rank, (g, prob) in enumerate(per[n], 1):
                    w.writerow([ds, rank, "-".join(g), repr(float(prob))])
        written.append(p)
    if figures:
        from .plotting import ngram_bar_chart

        for n in (2, 3):
            p = out_dir / f"pos_{'bi' if n == 2 else 'tri'}grams.svg"
            ngram_bar_chart(report, n, p)
            written.append(p)
    return written
