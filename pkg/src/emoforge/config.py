"""JSON run configuration: experiment, model, generation, paths and backend."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .corpus import PreprocessConfig
from .errors import ConfigError
from .gbdt import TrainConfig
from .genclient import DEFAULT_API_KEY_ENV, GenerationConfig, HttpBackend, MockBackend
from .harness import ExperimentConfig
from .tfidf import TfidfConfig

_EXPERIMENT_KEYS = ("seed_sizes", "increment", "n_increments", "folds", "holdout_n", "rng_seed",
                    "strategies", "k_pos", "k_neg", "importance_percentile", "ablation", "jobs")


def _build(cls, d, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    try:
        return cls(**d)
    except TypeError as e:
        raise ConfigError(f"{where}: {e}") from e


@dataclass(frozen=True)
class Paths:
    data_dir: str | None = None
    cache_dir: str | None = None
    out_dir: str = "runs"


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"
    seed: int = 0
    endpoint_url: str | None = None
    model_id: str | None = None
    auth_env_var: str = DEFAULT_API_KEY_ENV
    style: str = "messages"

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"backend.kind must be 'mock' or 'http', got {self.kind!r}")

    def create(self, generation: GenerationConfig):
        if self.kind == "mock":
            return MockBackend(self.seed)
        if not self.endpoint_url:
            raise ConfigError("backend.endpoint_url is required for the http backend")
        return HttpBackend(self.endpoint_url, self.model_id or generation.model_id,
                           auth_env_var=self.auth_env_var, style=self.style)


@dataclass(frozen=True)
class CliConfig:
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    paths: Paths = Paths()
    backend: BackendConfig = BackendConfig()

    @classmethod
    def from_dict(cls, d: dict) -> "CliConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        sections = ("experiment", "train", "tfidf", "preprocess", "generation", "paths", "backend")
        unknown = sorted(set(d) - set(sections))
        if unknown:
            raise ConfigError(f"unknown config section(s) {', '.join(unknown)}")
        exp = dict(d.get("experiment", {}))
        bad = sorted(set(exp) - set(_EXPERIMENT_KEYS))
        if bad:
            raise ConfigError(f"experiment: unknown key(s) {', '.join(bad)}")
        pp = dict(d.get("preprocess", {}))
        if "preserve_list" in pp:
            pp["preserve_list"] = frozenset(pp["preserve_list"])
        try:
            experiment = ExperimentConfig(
                **exp,
                train=_build(TrainConfig, d.get("train", {}), "train"),
                tfidf=_build(TfidfConfig, d.get("tfidf", {}), "tfidf"),
                preprocess=_build(PreprocessConfig, pp, "preprocess"),
                generation=_build(GenerationConfig, d.get("generation", {}), "generation"),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"experiment: {e}") from e
        return cls(experiment, _build(Paths, d.get("paths", {}), "paths"),
                   _build(BackendConfig, d.get("backend", {}), "backend"))

    @classmethod
    def load(cls, path) -> "CliConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        exp = self.experiment.to_dict()
        out = {"experiment": {k: exp[k] for k in _EXPERIMENT_KEYS}}
        for section in ("train", "tfidf", "preprocess", "generation"):
            out[section] = exp[section]
        out["paths"] = {f.name: getattr(self.paths, f.name) for f in fields(Paths)}
        out["backend"] = {f.name: getattr(self.backend, f.name) for f in fields(BackendConfig)}
        return out

    def config_hash(self) -> str:
        """Hash of everything that affects results (paths and jobs excluded)."""
        d = self.to_dict()
        d.pop("paths")
        d["experiment"].pop("jobs")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]

    def with_overrides(self, **kw) -> "CliConfig":
        """Apply command-line scalars; ``None`` values leave the config untouched."""
        cfg = self
        exp_kw = {k: v for k, v in kw.items() if k in _EXPERIMENT_KEYS and v is not None}
        if exp_kw:
            cfg = replace(cfg, experiment=replace(cfg.experiment, **exp_kw))
        path_kw = {k: v for k, v in kw.items() if k in ("data_dir", "cache_dir", "out_dir") and v is not None}
        if path_kw:
            cfg = replace(cfg, paths=replace(cfg.paths, **{k: str(v) for k, v in path_kw.items()}))
        if kw.get("backend") is not None:
            cfg = replace(cfg, backend=replace(cfg.backend, kind=kw["backend"]))
        return cfg

    def run_dir(self) -> Path:
        return Path(self.paths.out_dir) / self.config_hash()

    def cache_dir(self) -> Path:
        return Path(self.paths.cache_dir) if self.paths.cache_dir else Path(self.paths.out_dir) / "cache"
