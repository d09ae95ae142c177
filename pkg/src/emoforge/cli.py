"""emoforge command line.

Every command takes ``--config`` (JSON) plus scalar overrides, prints the
effective config hash and writes under ``<out_dir>/<config hash>/``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 backend error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import gbdt, tfidf
from .config import CliConfig
from .corpus import EMOTIONS, EmotionLabel, class_distribution, load_tweeteval_dir
from .demo import write_demo_dir
from .errors import ConfigError, EmoforgeError
from .genclient import SyntheticCache, generate_synthetic
from .harness import ABLATION_STRATEGIES, Experiment, Strategy, emit_reports, f1_scores
from .linguistics import write_report
from .shap import global_importance

log = logging.getLogger("emoforge")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--seed", type=int, dest="rng_seed", help="master RNG seed")
    p.add_argument("--data-dir", type=Path, help="directory with TweetEval *_text.txt / *_labels.txt")
    p.add_argument("--cache-dir", type=Path, help="synthetic data cache (default <out-dir>/cache)")
    p.add_argument("--out-dir", type=Path, help="parent of run directories")
    p.add_argument("--backend", choices=("mock", "http"))
    p.add_argument("--jobs", type=int, help="max concurrent training jobs")
    p.add_argument("--no-figures", action="store_true", help="skip SVG figures")
    p.add_argument("-v", "--verbose", action="store_true")


def _seed_size(p: argparse.ArgumentParser):
    p.add_argument("--seed-size", type=int, help="seed size (default: first configured)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emoforge", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a TweetEval directory and print class counts")
    _common(p)

    p = sub.add_parser("split", help="write seed/pool/holdout plans for every seed size and fold")
    _common(p)

    p = sub.add_parser("train", help="train the seed-only baseline and score the holdout")
    _common(p)
    _seed_size(p)
    p.add_argument("--fold", type=int, default=0)

    p = sub.add_parser("keywords", help="SHAP-filtered differential keywords per emotion")
    _common(p)
    _seed_size(p)

    p = sub.add_parser("generate", help="fill the synthetic cache for one strategy")
    _common(p)
    _seed_size(p)
    p.add_argument("--strategy", default="ShapGuided",
                   choices=[s.value for s in Strategy if s.synthetic])
    p.add_argument("--emotion", help="generate for one emotion only")
    p.add_argument("--count", type=int, help="number of tweets (with --emotion)")

    p = sub.add_parser("run", help="full incremental experiment")
    _common(p)
    p.add_argument("--ablation", action="store_true", help="exemplar ablation strategies")

    p = sub.add_parser("lingstats", help="lexical and POS diversity of generated pools")
    _common(p)
    _seed_size(p)

    p = sub.add_parser("demo-data", help="write a small synthetic TweetEval-format corpus")
    p.add_argument("out", type=Path)
    p.add_argument("-n", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    return ap


def _config(args) -> CliConfig:
    cfg = CliConfig.load(args.config) if args.config else CliConfig()
    cfg = cfg.with_overrides(rng_seed=args.rng_seed, jobs=args.jobs, data_dir=args.data_dir,
                             cache_dir=args.cache_dir, out_dir=args.out_dir, backend=args.backend)
    if getattr(args, "ablation", False):
        cfg = replace(cfg, experiment=replace(cfg.experiment, ablation=True,
                                              strategies=ABLATION_STRATEGIES))
    print(f"config_hash: {cfg.config_hash()}")
    return cfg


def _corpus(cfg: CliConfig):
    if not cfg.paths.data_dir:
        raise ConfigError("no data directory: pass --data-dir or set paths.data_dir")
    return load_tweeteval_dir(cfg.paths.data_dir)


def _run_dir(cfg: CliConfig) -> Path:
    d = cfg.run_dir()
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    return d


def _experiment(cfg: CliConfig, corpus, need_backend: bool) -> Experiment:
    backend = cfg.backend.create(cfg.experiment.generation) if need_backend else None
    return Experiment(corpus, cfg.experiment, backend, cfg.cache_dir())


def _pick_seed(cfg: CliConfig, args) -> int:
    return args.seed_size if args.seed_size is not None else cfg.experiment.seed_sizes[0]


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def cmd_ingest(args):
    cfg = _config(args)
    corpus = _corpus(cfg)
    dist = class_distribution(corpus)
    counts = {e: sum(1 for s in corpus if s.label == e) for e in EMOTIONS}
    print(f"samples: {len(corpus)}")
    for e in EMOTIONS:
        print(f"{e.name:<9} {counts[e]:>6}  {dist.get(e, 0.0):.3f}")
    print(f"content_hash: {corpus.content_hash()}")
    return 0


def cmd_split(args):
    cfg = _config(args)
    exp = _experiment(cfg, _corpus(cfg), need_backend=False)
    plans = [exp.plan(s, f).to_dict() for s in cfg.experiment.seed_sizes
             for f in range(cfg.experiment.folds)]
    _write_json(_run_dir(cfg) / "splits.json", plans)
    return 0


def cmd_train(args):
    cfg = _config(args)
    corpus = _corpus(cfg)
    exp = _experiment(cfg, corpus, need_backend=False)
    seed_size = _pick_seed(cfg, args)
    vec, _, _, model = exp.seed_model(seed_size, args.fold)
    holdout = corpus.subset(exp.plan(seed_size, args.fold).holdout_ids)
    docs = [exp.tokens(s) for s in holdout]
    pred = gbdt.predict_label(model, tfidf.transform_many(vec, docs))
    scores = f1_scores(pred, holdout.labels)
    out = _run_dir(cfg) / "train" / f"seed{seed_size}_fold{args.fold}"
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(model.to_json(), encoding="utf-8")
    (out / "tfidf.json").write_text(vec.to_json(), encoding="utf-8")
    metrics = {"macro_f1": scores["macro"],
               **{f"f1_{e.name}": v for e, v in zip(EMOTIONS, scores["per_class"])}}
    _write_json(out / "metrics.json", metrics)
    print(f"macro_f1: {scores['macro']:.4f}")
    return 0


def cmd_keywords(args):
    cfg = _config(args)
    exp = _experiment(cfg, _corpus(cfg), need_backend=False)
    seed_size = _pick_seed(cfg, args)
    sets = exp.keyword_sets(seed_size)
    _write_json(_run_dir(cfg) / "keywords" / f"seed{seed_size}.json",
                {e.name: ks.to_dict() for e, ks in sets.items()})
    for e, ks in sets.items():
        print(f"{e.name:<9} +[{', '.join(ks.positive)}]  -[{', '.join(ks.negative)}]")
    return 0


def cmd_generate(args):
    cfg = _config(args)
    exp = _experiment(cfg, _corpus(cfg), need_backend=True)
    seed_size = _pick_seed(cfg, args)
    strategy = Strategy(args.strategy)
    if strategy is Strategy.ShapGuidedNoExemplars and not cfg.experiment.ablation:
        exp.config = replace(cfg.experiment, ablation=True)
    if args.emotion is None:
        pool = exp.synthetic_pool(seed_size, strategy)
        samples = [s for e in sorted(pool) for s in pool[e]]
    else:
        e = EmotionLabel.parse(args.emotion)
        if not args.count:
            raise ConfigError("--count is required with --emotion")
        seed = exp.corpus.subset(exp.plan(seed_size, 0).seed_ids)
        exemplars = [s.text for s in seed if s.label == e] if strategy.uses_exemplars else []
        kw = exp.keyword_sets(seed_size)[e] if strategy.uses_keywords else None
        batch = generate_synthetic(exp.backend, e, args.count, exemplars, kw, cfg.experiment.generation,
                                   cache=SyntheticCache(cfg.cache_dir()))
        samples = batch.samples
    out = _run_dir(cfg) / "synthetic" / f"{strategy.value}_seed{seed_size}.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        for s in samples:
            f.write(json.dumps({"id": s.id, "label": s.label.name, "text": s.text}) + "\n")
    print(f"wrote {out} ({len(samples)} tweets)")
    return 0


def cmd_run(args):
    cfg = _config(args)
    corpus = _corpus(cfg)
    need_backend = any(s.synthetic for s in cfg.experiment.strategies)
    exp = _experiment(cfg, corpus, need_backend)
    result = exp.run()
    result.manifest["config_hash"] = cfg.config_hash()
    result.manifest["cli_config"] = cfg.to_dict()
    run_dir = _run_dir(cfg)
    for p in emit_reports(result, run_dir, figures=not args.no_figures):
        print(f"wrote {p}")
    if {Strategy.ShapGuided, Strategy.Naive} <= set(cfg.experiment.strategies):
        for seed_size in cfg.experiment.seed_sizes:
            report = exp.diversity(seed_size)
            for p in write_report(report, run_dir / "lingstats" / f"seed{seed_size}",
                                  figures=not args.no_figures):
                print(f"wrote {p}")
    return 0


def cmd_lingstats(args):
    cfg = _config(args)
    exp = _experiment(cfg, _corpus(cfg), need_backend=True)
    seed_size = _pick_seed(cfg, args)
    strategies = [s for s in cfg.experiment.strategies if s.synthetic] or [Strategy.ShapGuided, Strategy.Naive]
    report = exp.diversity(seed_size, strategies)
    for p in write_report(report, _run_dir(cfg) / "lingstats" / f"seed{seed_size}",
                          figures=not args.no_figures):
        print(f"wrote {p}")
    for metric, ds, emo, v in report.rows():
        print(f"{metric:<12} {ds:<22} {emo:<9} {v:.4f}")
    return 0


def cmd_demo_data(args):
    d = write_demo_dir(args.out, args.n, args.seed)
    print(f"wrote {args.n} samples to {d}")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "split": cmd_split,
    "train": cmd_train,
    "keywords": cmd_keywords,
    "generate": cmd_generate,
    "run": cmd_run,
    "lingstats": cmd_lingstats,
    "demo-data": cmd_demo_data,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except EmoforgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
