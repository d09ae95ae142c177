"""Incremental augmentation experiment: real expansion vs. guided vs. naive synthesis.

For every seed size and fold the strategies share one SplitPlan, so their
increment-0 models are identical and later differences come from the added
data alone. Folds re-draw seed and pool under fold-specific random streams
while the holdout stays fixed.

Each synthetic strategy gets one generated pool per seed size, built from the
fold-0 seed: its trained model supplies the SHAP keywords and its texts supply
the exemplars. Folds then take class-proportional prefixes of that pool in a
fold-specific order.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import gbdt, tfidf
from .corpus import (
    EMOTIONS,
    N_CLASSES,
    Corpus,
    EmotionLabel,
    Origin,
    PreprocessConfig,
    SplitPlan,
    class_distribution,
    make_splits,
    preprocess,
)
from .errors import ConfigError, DataError, LengthMismatch, PoolExhausted
from .genclient import GenerationConfig, SyntheticCache, generate_synthetic
from .keywords import ImportancePolicy, extract_keywords
from .linguistics import DiversityReport, diversity_report
from .shap import global_importance

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("strategy", "seed_size", "increment", "fold", "n_train", "macro_f1",
                  "f1_anger", "f1_joy", "f1_optimism", "f1_sadness")


class Strategy(str, enum.Enum):
    RealExpansion = "RealExpansion"
    ShapGuided = "ShapGuided"
    Naive = "Naive"
    ShapGuidedNoExemplars = "ShapGuidedNoExemplars"

    @property
    def synthetic(self) -> bool:
        return self is not Strategy.RealExpansion

    @property
    def uses_keywords(self) -> bool:
        return self in (Strategy.ShapGuided, Strategy.ShapGuidedNoExemplars)

    @property
    def uses_exemplars(self) -> bool:
        return self in (Strategy.ShapGuided, Strategy.Naive)


DEFAULT_STRATEGIES = (Strategy.RealExpansion, Strategy.ShapGuided, Strategy.Naive)
ABLATION_STRATEGIES = (Strategy.ShapGuided, Strategy.ShapGuidedNoExemplars, Strategy.RealExpansion)

_ID_BASE = {
    Strategy.ShapGuided: 1_000_000,
    Strategy.Naive: 2_000_000,
    Strategy.ShapGuidedNoExemplars: 3_000_000,
}


@dataclass(frozen=True)
class ExperimentConfig:
    seed_sizes: tuple = (100, 500, 1000)
    increment: int = 100
    n_increments: int = 10
    folds: int = 10
    holdout_n: int = 1000
    rng_seed: int = 0
    strategies: tuple = DEFAULT_STRATEGIES
    k_pos: int = 5
    k_neg: int = 5
    importance_percentile: float = 50.0
    ablation: bool = False
    jobs: int = 1
    train: gbdt.TrainConfig = gbdt.TrainConfig()
    tfidf: tfidf.TfidfConfig = tfidf.TfidfConfig()
    preprocess: PreprocessConfig = PreprocessConfig()
    generation: GenerationConfig = GenerationConfig()

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.n_increments < 1 or self.increment < 1:
            raise ConfigError("increment and n_increments must be >= 1")
        if not self.seed_sizes:
            raise ConfigError("seed_sizes must be non-empty")
        strategies = tuple(Strategy(s) for s in self.strategies)
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "seed_sizes", tuple(int(s) for s in self.seed_sizes))
        if Strategy.ShapGuidedNoExemplars in strategies and not self.ablation:
            raise ConfigError("ShapGuidedNoExemplars is only valid in ablation runs")

    def to_dict(self) -> dict:
        return {
            "seed_sizes": list(self.seed_sizes),
            "increment": self.increment,
            "n_increments": self.n_increments,
            "folds": self.folds,
            "holdout_n": self.holdout_n,
            "rng_seed": self.rng_seed,
            "strategies": [s.value for s in self.strategies],
            "k_pos": self.k_pos,
            "k_neg": self.k_neg,
            "importance_percentile": self.importance_percentile,
            "ablation": self.ablation,
            "jobs": self.jobs,
            "train": self.train.to_dict(),
            "tfidf": self.tfidf.to_dict(),
            "preprocess": self.preprocess.to_dict(),
            "generation": self.generation.to_dict(),
        }


@dataclass(frozen=True)
class RunRow:
    strategy: str
    seed_size: int
    increment: int
    fold: int
    n_train: int
    macro_f1: float
    per_class_f1: tuple

    def sort_key(self):
        return (self.strategy, self.seed_size, self.increment, self.fold)

    def csv_fields(self) -> list[str]:
        return [self.strategy, str(self.seed_size), str(self.increment), str(self.fold),
                str(self.n_train), repr(float(self.macro_f1))] + [repr(float(v)) for v in self.per_class_f1]


@dataclass
class RunResult:
    rows: list
    manifest: dict = field(default_factory=dict)

    def sorted_rows(self) -> list[RunRow]:
        return sorted(self.rows, key=RunRow.sort_key)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in self.sorted_rows():
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def summary(self) -> list[dict]:
        groups = {}
        for r in self.rows:
            groups.setdefault((r.strategy, r.seed_size, r.increment), []).append(r)
        out = []
        for (strategy, seed, inc), rows in sorted(groups.items()):
            macro = np.array([r.macro_f1 for r in rows])
            per = np.array([r.per_class_f1 for r in rows])
            ddof = 1 if len(rows) > 1 else 0
            row = {
                "strategy": strategy, "seed_size": seed, "increment": inc,
                "n_added": rows[0].n_train - seed, "n_train": rows[0].n_train,
                "n_folds": len(rows),
                "macro_f1_mean": float(macro.mean()), "macro_f1_sd": float(macro.std(ddof=ddof)),
            }
            for c, e in enumerate(EMOTIONS):
                row[f"f1_{e.name}_mean"] = float(per[:, c].mean())
                row[f"f1_{e.name}_sd"] = float(per[:, c].std(ddof=ddof))
            out.append(row)
        return out


# ---------------------------------------------------------------------------
# metrics


def f1_scores(pred, gold, n_classes: int = N_CLASSES) -> dict:
    """Per-class F1 (0 when undefined) and their unweighted mean."""
    pred = np.asarray([int(p) for p in pred])
    gold = np.asarray([int(g) for g in gold])
    if len(pred) != len(gold) or len(pred) == 0:
        raise LengthMismatch(f"{len(pred)} predictions vs {len(gold)} gold labels")
    per = []
    for c in range(n_classes):
        tp = float(np.sum((pred == c) & (gold == c)))
        fp = float(np.sum((pred == c) & (gold != c)))
        fn = float(np.sum((pred != c) & (gold == c)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        denom = precision + recall
        per.append(2 * precision * recall / denom if denom else 0.0)
    return {"per_class": per, "macro": float(np.mean(per))}


def _sha(obj) -> str:
    if not isinstance(obj, str):
        obj = json.dumps(obj, sort_keys=True)
    return hashlib.sha256(obj.encode()).hexdigest()


def _fit_and_score(train_docs, train_labels, test_docs, test_labels, tfidf_cfg, train_cfg):
    vec = tfidf.fit(train_docs, tfidf_cfg)
    model = gbdt.train(tfidf.transform_many(vec, train_docs), train_labels, train_cfg)
    pred = gbdt.predict_label(model, tfidf.transform_many(vec, test_docs))
    scores = f1_scores(pred, test_labels)
    return scores, _sha(model.to_json())


def _fit_and_score_task(args):
    return _fit_and_score(*args)


def _quota(proportions: dict, n: int) -> dict:
    exact = {c: n * p for c, p in proportions.items()}
    q = {c: int(np.floor(v)) for c, v in exact.items()}
    for c in sorted(exact, key=lambda c: (-(exact[c] - q[c]), int(c)))[: n - sum(q.values())]:
        q[c] += 1
    return q


def proportional_order(by_class: dict, proportions: dict, rng) -> list:
    """Interleave shuffled per-class lists so every prefix tracks ``proportions``."""
    queues = {c: [items[j] for j in rng.permutation(len(items))] for c, items in by_class.items()}
    taken = {c: 0 for c in queues}
    total = sum(len(q) for q in queues.values())
    order = []
    for i in range(total):
        live = [c for c in sorted(queues) if taken[c] < len(queues[c])]
        c = max(live, key=lambda c: (proportions.get(c, 0.0) * (i + 1) - taken[c], -int(c)))
        order.append(queues[c][taken[c]])
        taken[c] += 1
    return order


# ---------------------------------------------------------------------------
# experiment


class Experiment:
    def __init__(self, corpus: Corpus, config: ExperimentConfig, backend=None,
                 cache_dir=None, sleep=time.sleep):
        self.corpus = corpus
        self.config = config
        self.backend = backend
        self.cache = SyntheticCache(cache_dir) if cache_dir is not None else None
        self.sleep = sleep
        self._tokens = {}
        self._plans = {}
        self._seed_models = {}
        self._keywords = {}
        self._pools = {}
        self._baseline = {}
        self.leakage = {"holdout_in_training": 0, "holdout_in_exemplars": 0, "holdout_in_keyword_data": 0}
        self.pairing = []
        self.model_hashes = {}

    # -- data helpers
    def tokens(self, sample) -> list[str]:
        key = (sample.origin, sample.id)
        if key not in self._tokens:
            self._tokens[key] = preprocess(sample.text, self.config.preprocess)
        return self._tokens[key]

    def plan(self, seed_size: int, fold: int) -> SplitPlan:
        key = (seed_size, fold)
        if key not in self._plans:
            c = self.config
            self._plans[key] = make_splits(self.corpus, c.holdout_n, seed_size, c.increment,
                                           c.n_increments, c.rng_seed, fold)
        return self._plans[key]

    def _xy(self, samples):
        return [self.tokens(s) for s in samples], [int(s.label) for s in samples]

    # -- seed model, keywords, synthetic pools
    def seed_model(self, seed_size: int, fold: int = 0):
        key = (seed_size, fold)
        if key not in self._seed_models:
            plan = self.plan(seed_size, fold)
            seed = self.corpus.subset(plan.seed_ids)
            docs, labels = self._xy(seed)
            vec = tfidf.fit(docs, self.config.tfidf)
            X = tfidf.transform_many(vec, docs)
            model = gbdt.train(X, labels, self.config.train)
            self._seed_models[key] = (vec, X, labels, model)
        return self._seed_models[key]

    def keyword_sets(self, seed_size: int) -> dict:
        if seed_size not in self._keywords:
            plan = self.plan(seed_size, 0)
            if set(plan.seed_ids) & set(plan.holdout_ids):
                self.leakage["holdout_in_keyword_data"] += 1
            vec, X, labels, model = self.seed_model(seed_size, 0)
            importance = global_importance(model, X, terms=vec.terms)
            policy = ImportancePolicy(percentile=self.config.importance_percentile)
            provenance = {"model_hash": _sha(model.to_json()), "split_hash": plan.content_hash()}
            self._keywords[seed_size] = {
                e: extract_keywords(X, labels, importance, e, vec.terms, self.config.k_pos,
                                    self.config.k_neg, policy, provenance)
                for e in EMOTIONS
            }
        return self._keywords[seed_size]

    def synthetic_pool(self, seed_size: int, strategy: Strategy) -> dict:
        """Generated samples per emotion for one (strategy, seed size)."""
        key = (seed_size, strategy)
        if key in self._pools:
            return self._pools[key]
        if self.backend is None:
            raise ConfigError(f"strategy {strategy.value} needs a generation backend")
        c = self.config
        plan = self.plan(seed_size, 0)
        seed = self.corpus.subset(plan.seed_ids)
        holdout = set(plan.holdout_ids)
        proportions = class_distribution(seed)
        quotas = _quota(proportions, c.increment * c.n_increments)
        keywords = self.keyword_sets(seed_size) if strategy.uses_keywords else {}
        pool = {}
        for e in EMOTIONS:
            n = quotas.get(e, 0)
            if n == 0:
                continue
            exemplar_samples = [s for s in seed if s.label == e] if strategy.uses_exemplars else []
            self.leakage["holdout_in_exemplars"] += sum(s.id in holdout for s in exemplar_samples)
            # exemplar rotation is keyed by seed size and emotion only, so guided
            # and naive prompts see the same exemplars
            rng = np.random.default_rng([c.rng_seed, seed_size, int(e), 7])
            batch = generate_synthetic(
                self.backend, e, n, [s.text for s in exemplar_samples], keywords.get(e), c.generation,
                rng=rng, cache=self.cache, sleep=self.sleep,
                origin=Origin.synthetic_shap if strategy.uses_keywords else Origin.synthetic_naive,
                id_start=_ID_BASE[strategy] + int(e) * 100_000,
            )
            pool[e] = batch.samples
        self._pools[key] = pool
        return pool

    def added_samples(self, seed_size: int, fold: int, strategy: Strategy) -> list:
        c = self.config
        need = c.increment * c.n_increments
        plan = self.plan(seed_size, fold)
        if strategy is Strategy.RealExpansion:
            if len(plan.pool_ids) < need:
                raise PoolExhausted(f"pool has {len(plan.pool_ids)} samples, need {need}")
            return [self.corpus.get(i) for i in plan.pool_ids[:need]]
        pool = self.synthetic_pool(seed_size, strategy)
        proportions = class_distribution(self.corpus.subset(self.plan(seed_size, 0).seed_ids))
        rng = np.random.default_rng([c.rng_seed, seed_size, fold, 11])
        return proportional_order(pool, proportions, rng)[:need]

    # -- evaluation
    def _tasks(self, seed_size: int, fold: int, strategy: Strategy):
        c = self.config
        plan = self.plan(seed_size, fold)
        seed = [self.corpus.get(i) for i in plan.seed_ids]
        holdout = [self.corpus.get(i) for i in plan.holdout_ids]
        test_docs, test_labels = self._xy(holdout)
        added = self.added_samples(seed_size, fold, strategy)
        holdout_ids = set(plan.holdout_ids)
        self.pairing.append({
            "strategy": strategy.value, "seed_size": seed_size, "fold": fold,
            "seed_hash": _sha(list(plan.seed_ids)), "holdout_hash": _sha(list(plan.holdout_ids)),
        })
        for k in range(1, c.n_increments + 1):
            train = seed + added[: k * c.increment]
            self.leakage["holdout_in_training"] += sum(
                s.origin is Origin.real and s.id in holdout_ids for s in train)
            docs, labels = self._xy(train)
            yield (strategy.value, seed_size, k, fold, len(train)), (
                docs, labels, test_docs, test_labels, c.tfidf, c.train)

    def _baseline_row(self, seed_size: int, fold: int):
        key = (seed_size, fold)
        if key not in self._baseline:
            plan = self.plan(seed_size, fold)
            vec, _, _, model = self.seed_model(seed_size, fold)
            holdout = [self.corpus.get(i) for i in plan.holdout_ids]
            docs, labels = self._xy(holdout)
            pred = gbdt.predict_label(model, tfidf.transform_many(vec, docs))
            self._baseline[key] = f1_scores(pred, labels)
            self.model_hashes[f"seed/{seed_size}/{fold}"] = _sha(model.to_json())
        return self._baseline[key]

    def run_strategy(self, plan_or_seed, strategy, fold: int | None = None) -> list[RunRow]:
        """Rows for increments 0..n of one strategy on one (seed size, fold)."""
        if isinstance(plan_or_seed, SplitPlan):
            seed_size, fold = plan_or_seed.seed_size, plan_or_seed.fold
            self._plans.setdefault((seed_size, fold), plan_or_seed)
        else:
            seed_size, fold = int(plan_or_seed), int(fold or 0)
        return self._run([(seed_size, fold, Strategy(strategy))])

    def _run(self, cells) -> list[RunRow]:
        rows = []
        keys, tasks = [], []
        for seed_size, fold, strategy in cells:
            base = self._baseline_row(seed_size, fold)
            rows.append(RunRow(strategy.value, seed_size, 0, fold, seed_size,
                               base["macro"], tuple(base["per_class"])))
            for key, args in self._tasks(seed_size, fold, strategy):
                keys.append(key)
                tasks.append(args)
        if self.config.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=self.config.jobs) as ex:
                results = list(ex.map(_fit_and_score_task, tasks))
        else:
            results = [_fit_and_score(*t) for t in tasks]
        for (strategy, seed_size, k, fold, n_train), (scores, mhash) in zip(keys, results):
            self.model_hashes[f"{strategy}/{seed_size}/{k}/{fold}"] = mhash
            rows.append(RunRow(strategy, seed_size, k, fold, n_train,
                               scores["macro"], tuple(scores["per_class"])))
        return rows

    def run(self, strategies=None) -> RunResult:
        c = self.config
        strategies = tuple(Strategy(s) for s in (strategies or c.strategies))
        started = datetime.now(timezone.utc).isoformat()
        # generate synthetic pools up front: backend calls stay serialized
        for seed_size in c.seed_sizes:
            for s in strategies:
                if s.synthetic:
                    self.synthetic_pool(seed_size, s)
        cells = [(seed_size, fold, s) for seed_size in c.seed_sizes
                 for fold in range(c.folds) for s in strategies]
        rows = self._run(cells)
        if any(self.leakage.values()):
            raise DataError(f"holdout leakage detected: {self.leakage}")
        return RunResult(rows, self.manifest(strategies, started))

    def manifest(self, strategies, started=None) -> dict:
        c = self.config
        return {
            "config": c.to_dict(),
            "strategies": [s.value for s in strategies],
            "protocol": {
                "cross_validation": "repeated seed/pool re-splits with a fixed holdout",
                "splits": "label-stratified",
                "synthetic_pool": "one pool per (strategy, seed_size) from the fold-0 seed, "
                                  "class-proportional fold-specific prefixes",
                "tfidf": "refit on the training set at every increment",
                "exemplars": "rotated windows over seed texts of the target emotion",
                "increment_0": "seed-only baseline shared by all strategies",
            },
            "data_hash": self.corpus.content_hash(),
            "splits": {f"{s}/{f}": p.content_hash() for (s, f), p in sorted(self._plans.items())},
            "pairing": sorted(self.pairing, key=lambda p: (p["seed_size"], p["fold"], p["strategy"])),
            "leakage": dict(self.leakage),
            "model_hashes": dict(sorted(self.model_hashes.items())),
            "keywords": {str(s): {e.name: ks.to_dict() for e, ks in kw.items()}
                         for s, kw in sorted(self._keywords.items())},
            "synthetic_pools": {
                f"{strategy.value}/{seed}": {e.name: _sha([x.text for x in v]) for e, v in pool.items()}
                for (seed, strategy), pool in sorted(self._pools.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
            },
            "backend": getattr(self.backend, "backend_id", None),
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
        }

    def synthetic_corpus(self, seed_size: int, strategy: Strategy) -> Corpus:
        pool = self.synthetic_pool(seed_size, strategy)
        return Corpus([s for e in sorted(pool) for s in pool[e]])

    def diversity(self, seed_size: int, strategies=None) -> DiversityReport:
        """Real fold-0 seed texts against each generated pool of this seed size."""
        strategies = [Strategy(s) for s in (strategies or self.config.strategies) if Strategy(s).synthetic]
        real = self.corpus.subset(self.plan(seed_size, 0).seed_ids)
        pools = {s: self.synthetic_corpus(seed_size, s) for s in strategies}
        extra = {s.value: c for s, c in pools.items()
                 if s not in (Strategy.ShapGuided, Strategy.Naive)}
        return diversity_report(real, pools.get(Strategy.ShapGuided), pools.get(Strategy.Naive),
                                self.config.preprocess, extra=extra)


def run_strategy(plan: SplitPlan, strategy, config: ExperimentConfig, backend=None,
                 corpus: Corpus | None = None, cache_dir=None) -> list[RunRow]:
    if corpus is None:
        raise ConfigError("run_strategy needs the corpus the plan was drawn from")
    return Experiment(corpus, config, backend, cache_dir).run_strategy(plan, strategy)


def run_experiment(corpus: Corpus, config: ExperimentConfig, backend=None, cache_dir=None,
                   sleep=time.sleep) -> RunResult:
    return Experiment(corpus, config, backend, cache_dir, sleep).run()


def run_ablation(corpus: Corpus, config: ExperimentConfig, backend=None, cache_dir=None,
                 sleep=time.sleep) -> RunResult:
    config = replace(config, ablation=True, strategies=ABLATION_STRATEGIES)
    return Experiment(corpus, config, backend, cache_dir, sleep).run()


# ---------------------------------------------------------------------------
# reports


def emit_reports(result: RunResult, out_dir, figures: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    p = out_dir / "results.csv"
    p.write_text(result.to_csv(), encoding="utf-8", newline="")
    written.append(p)

    p = out_dir / "manifest.json"
    p.write_text(json.dumps(result.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)

    summary = result.summary()
    p = out_dir / "summary.csv"
    with open(p, "w", newline="", encoding="utf-8") as f:
        if summary:
            w = csv.DictWriter(f, fieldnames=list(summary[0]), lineterminator="\n")
            w.writeheader()
            for row in summary:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    written.append(p)

    if figures and summary:
        from .plotting import f1_line_chart

        p = out_dir / "f1_macro.svg"
        f1_line_chart(summary, p, "macro_f1")
        written.append(p)
        for e in EMOTIONS:
            p = out_dir / f"f1_{e.name}.svg"
            f1_line_chart(summary, p, f"f1_{e.name}")
            written.append(p)
    return written
