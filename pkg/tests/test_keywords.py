import math

import numpy as np
import pytest
from conftest import (
    HAND_ANGER_NEG,
    HAND_ANGER_POS,
    HAND_ANGER_SCORES,
    HAND_TERMS,
    HAND_X,
    HAND_Y,
    two_mean_oracle,
)

from emoforge import gbdt, tfidf
from emoforge.corpus import EMOTIONS, EmotionLabel, preprocess
from emoforge.demo import make_demo_corpus
from emoforge.errors import ConfigError, EmptyAfterFilter, NoComplementSamples, VocabularyMismatch
from emoforge.keywords import (
    DifferentialScore,
    ImportancePolicy,
    KeywordSet,
    differential_scores,
    extract_keywords,
    filter_by_importance,
    importance_threshold,
    split_keywords,
)
from emoforge.shap import GlobalImportance, global_importance


def test_hand_scores():
    scores = differential_scores(HAND_X, HAND_Y, 0, HAND_TERMS)
    for s in scores:
        assert s.score == pytest.approx(HAND_ANGER_SCORES[s.term], abs=1e-12)


@pytest.mark.parametrize("target", range(4))
def test_scores_match_oracle(target):
    scores = differential_scores(HAND_X, HAND_Y, target, HAND_TERMS)
    np.testing.assert_allclose([s.score for s in scores], two_mean_oracle(HAND_X, HAND_Y, target),
                               atol=1e-12)


def test_trivial_scores():
    X = np.array([[1.0, 0.5], [0.0, 0.5]])
    s = differential_scores(X, [0, 1], 0, ["only", "same"])
    assert s[0].score == 1.0 and s[1].score == 0.0
    with pytest.raises(NoComplementSamples):
        differential_scores(X, [0, 0], 0)
    with pytest.raises(VocabularyMismatch):
        differential_scores(X, [0, 1], 0, ["a"])


def test_hand_split():
    ks = split_keywords(differential_scores(HAND_X, HAND_Y, 0, HAND_TERMS), 2, 2, emotion="anger")
    assert ks.positive == HAND_ANGER_POS
    assert ks.negative == HAND_ANGER_NEG
    assert ks.emotion is EmotionLabel.anger


def test_split_ties_and_overlap():
    scores = [DifferentialScore(t, s) for t, s in [("b", 0.5), ("a", 0.5), ("c", 0.25)]]
    ks = split_keywords(scores, 2, 2)
    assert ks.positive == ["a", "b"]
    assert ks.negative == ["c"]
    ks = split_keywords([DifferentialScore("x", 0.1)], 1, 0)
    assert ks.positive == ["x"] and ks.negative == []


def test_split_errors():
    with pytest.raises(EmptyAfterFilter):
        split_keywords([], 1, 1)
    with pytest.raises(ConfigError):
        split_keywords([DifferentialScore("x", 0.1)], 51, 0)


def _imp(row, terms=None):
    row = np.asarray(row, dtype=float)
    return GlobalImportance(np.vstack([row, row]), 1, terms)


def test_filter_median_oracle():
    row = [0.0, 0.4, 0.1, 0.3, 0.2, 0.0]
    scores = [DifferentialScore(str(i), 0.1 * i) for i in range(6)]
    kept = filter_by_importance(scores, _imp(row), 0)
    nz = sorted(v for v in row if v > 0)
    med = (nz[1] + nz[2]) / 2
    assert [s.term for s in kept] == [str(i) for i, v in enumerate(row) if v > 0 and v >= med]
    assert importance_threshold(_imp(row), 0) == pytest.approx(med)


def test_filter_zero_importance_never_survives():
    scores = [DifferentialScore("a", 9.0), DifferentialScore("b", 0.1)]
    kept = filter_by_importance(scores, _imp([0.0, 0.5], ("a", "b")), 0, ImportancePolicy(threshold=0.0))
    assert [s.term for s in kept] == ["b"]


def test_filter_all_above_threshold():
    scores = [DifferentialScore("a", 1.0), DifferentialScore("b", -1.0)]
    kept = filter_by_importance(scores, _imp([0.5, 0.7], ("a", "b")), 0, ImportancePolicy(threshold=0.1))
    assert [(s.term, s.score) for s in kept] == [("a", 1.0), ("b", -1.0)]


def test_filter_unknown_term():
    with pytest.raises(VocabularyMismatch):
        filter_by_importance([DifferentialScore("zz", 1.0)], _imp([1.0], ("a",)), 0)


def test_keyword_set_roundtrip():
    ks = KeywordSet(EmotionLabel.joy, ["a"], ["b"], 0.25, 1, 1, {"model_hash": "x"})
    back = KeywordSet.from_dict(ks.to_dict())
    assert back == ks
    nan = KeywordSet(None, [], [], math.nan, 0, 0)
    assert math.isnan(KeywordSet.from_dict(nan.to_dict()).threshold_used)


def test_extract_keywords_on_demo_corpus():
    c = make_demo_corpus(600, seed=2)
    docs = [preprocess(t) for t in c.texts]
    vec = tfidf.fit(docs)
    X = tfidf.transform_many(vec, docs)
    m = gbdt.train(X, c.labels, gbdt.TrainConfig(n_rounds=30, max_depth=4))
    imp = global_importance(m, X, vec.terms)
    ks = extract_keywords(X, c.labels, imp, EmotionLabel.anger, vec.terms)
    assert len(ks.positive) == 5
    assert not set(ks.positive) & set(ks.negative)
    # the demo corpus uses these as anger cue words
    assert set(ks.positive) & {"angry", "furious", "rage", "outrage", "mad", "hate", "livid"}
    for e in EMOTIONS:
        extract_keywords(X, c.labels, imp, e, vec.terms)
