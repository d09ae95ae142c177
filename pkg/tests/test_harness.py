import csv
import json

import numpy as np
import pytest

from emoforge.corpus import EmotionLabel, Origin, class_distribution
from emoforge.demo import make_demo_corpus
from emoforge.errors import ConfigError, LengthMismatch, PoolExhausted
from emoforge.gbdt import TrainConfig
from emoforge.genclient import GenerationConfig, MockBackend
from emoforge.harness import (
    RESULT_COLUMNS,
    Experiment,
    ExperimentConfig,
    Strategy,
    emit_reports,
    f1_scores,
    proportional_order,
    run_ablation,
    run_experiment,
    run_strategy,
)

SMALL = ExperimentConfig(seed_sizes=(40,), increment=10, n_increments=2, folds=2, holdout_n=100,
                         train=TrainConfig(n_rounds=10, max_depth=3),
                         generation=GenerationConfig(inter_call_delay_ms=0))


@pytest.fixture(scope="module")
def corpus():
    return make_demo_corpus(500, seed=11)


@pytest.fixture(scope="module")
def result(corpus):
    return run_experiment(corpus, SMALL, MockBackend(0))


def test_f1_examples():
    assert f1_scores([0, 1, 2, 3], [0, 1, 2, 3]) == {"per_class": [1.0] * 4, "macro": 1.0}
    assert f1_scores([1, 2, 3, 0], [0, 1, 2, 3])["macro"] == 0.0
    # class 0: TP=2, FP=1, FN=1
    s = f1_scores([0, 0, 0, 1, 1], [0, 0, 1, 0, 1])
    assert s["per_class"][0] == pytest.approx(2 / 3)
    with pytest.raises(LengthMismatch):
        f1_scores([0], [0, 1])


def test_proportional_order_prefixes():
    rng = np.random.default_rng(0)
    by_class = {0: list(range(50)), 1: list(range(100, 120)), 2: list(range(200, 230))}
    props = {0: 0.5, 1: 0.2, 2: 0.3}
    order = proportional_order(by_class, props, rng)
    assert sorted(order) == sorted(sum(by_class.values(), []))
    cls = [0 if x < 100 else 1 if x < 200 else 2 for x in order]
    for k in range(1, 101):
        for c, p in props.items():
            assert abs(cls[:k].count(c) - p * k) <= 1.0 + 1e-9


def test_row_count_and_columns(result):
    n_strat = len(SMALL.strategies)
    assert len(result.rows) == n_strat * SMALL.folds * (SMALL.n_increments + 1)
    lines = result.to_csv().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)


def test_increment_zero_shared(result):
    zero = {}
    for r in result.rows:
        if r.increment == 0:
            zero.setdefault(r.fold, set()).add((r.macro_f1, r.per_class_f1))
    assert all(len(v) == 1 for v in zero.values())


def test_monotone_training_size(result):
    for r in result.rows:
        assert r.n_train == r.seed_size + r.increment * SMALL.increment


def test_pairing_and_leakage(result):
    m = result.manifest
    assert m["leakage"] == {"holdout_in_training": 0, "holdout_in_exemplars": 0,
                            "holdout_in_keyword_data": 0}
    by_cell = {}
    for p in m["pairing"]:
        by_cell.setdefault((p["seed_size"], p["fold"]), set()).add((p["seed_hash"], p["holdout_hash"]))
    assert len(by_cell) == SMALL.folds
    assert all(len(v) == 1 for v in by_cell.values())
    assert len({h for v in by_cell.values() for _, h in v}) == 1  # holdout fixed across folds


def test_deterministic_rerun(corpus, result):
    again = run_experiment(corpus, SMALL, MockBackend(0))
    assert again.to_csv() == result.to_csv()


def test_jobs_do_not_change_results(corpus, result):
    from dataclasses import replace

    par = run_experiment(corpus, replace(SMALL, jobs=2), MockBackend(0))
    assert par.to_csv() == result.to_csv()


def test_synthetic_increments_class_proportional(corpus):
    exp = Experiment(corpus, SMALL, MockBackend(0))
    seed_dist = class_distribution(corpus.subset(exp.plan(40, 0).seed_ids))
    for fold in range(SMALL.folds):
        added = exp.added_samples(40, fold, Strategy.ShapGuided)
        assert all(s.origin is Origin.synthetic_shap for s in added)
        for k in (10, 20):
            counts = {e: sum(s.label == e for s in added[:k]) for e in seed_dist}
            for e, p in seed_dist.items():
                assert abs(counts[e] - p * k) <= 1.0 + 1e-9


def test_guided_and_naive_pools_differ(corpus):
    exp = Experiment(corpus, SMALL, MockBackend(0))
    shap = exp.synthetic_corpus(40, Strategy.ShapGuided)
    naive = exp.synthetic_corpus(40, Strategy.Naive)
    assert len(shap) == len(naive) == SMALL.increment * SMALL.n_increments
    assert shap.texts != naive.texts
    assert not set(shap.ids) & set(naive.ids)


def test_pool_exhausted(corpus):
    from dataclasses import replace

    cfg = replace(SMALL, strategies=(Strategy.RealExpansion,))
    exp = Experiment(corpus, cfg)
    plan = exp.plan(40, 0)
    short = type(plan)(plan.holdout_ids, plan.seed_ids, plan.pool_ids[:5], 40, 10, 2, plan.rng_seed, 0)
    with pytest.raises(PoolExhausted):
        run_strategy(short, Strategy.RealExpansion, cfg, corpus=corpus)


def test_real_expansion_without_backend(corpus):
    from dataclasses import replace

    cfg = replace(SMALL, strategies=(Strategy.RealExpansion,))
    res = run_experiment(corpus, cfg)
    assert {r.strategy for r in res.rows} == {"RealExpansion"}
    with pytest.raises(ConfigError):
        run_experiment(corpus, SMALL, backend=None)


def test_ablation(corpus):
    res = run_ablation(corpus, SMALL, MockBackend(0))
    assert {r.strategy for r in res.rows} == {"ShapGuided", "ShapGuidedNoExemplars", "RealExpansion"}
    with pytest.raises(ConfigError):
        ExperimentConfig(strategies=(Strategy.ShapGuidedNoExemplars,))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(folds=1)
    with pytest.raises(ConfigError):
        ExperimentConfig(increment=0)


def test_emit_reports(tmp_path, result):
    files = emit_reports(result, tmp_path)
    names = {p.name for p in files}
    assert {"results.csv", "manifest.json", "summary.csv", "f1_macro.svg", "f1_optimism.svg"} <= names
    rows = list(csv.DictReader(open(tmp_path / "summary.csv")))
    assert len(rows) == len(SMALL.strategies) * (SMALL.n_increments + 1)
    assert {"macro_f1_mean", "macro_f1_sd", "n_added"} <= set(rows[0])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["folds"] == SMALL.folds
    assert len(manifest["data_hash"]) == 64
