"""Tweet corpora: TweetEval ingestion, preprocessing and split plans."""
from __future__ import annotations

import enum
import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    DataError,
    EmptyCorpus,
    EmptyFile,
    InsufficientData,
    InvalidLabel,
    LineCountMismatch,
)


class EmotionLabel(enum.IntEnum):
    anger = 0
    joy = 1
    optimism = 2
    sadness = 3

    @classmethod
    def parse(cls, value) -> "EmotionLabel":
        if isinstance(value, EmotionLabel):
            return value
        if isinstance(value, str) and not value.strip().lstrip("-").isdigit():
            return cls[value.strip().lower()]
        return cls(int(value))


EMOTIONS = tuple(EmotionLabel)
N_CLASSES = len(EMOTIONS)


class Origin(str, enum.Enum):
    real = "real"
    synthetic_shap = "synthetic_shap"
    synthetic_naive = "synthetic_naive"


# synthetic ids live far above any line number
SYNTHETIC_ID_OFFSET = {
    Origin.real: 0,
    Origin.synthetic_shap: 1_000_000,
    Origin.synthetic_naive: 2_000_000,
}


@dataclass(frozen=True)
class LabeledSample:
    id: int
    text: str
    label: EmotionLabel
    origin: Origin = Origin.real

    def __post_init__(self):
        if not self.text.strip():
            raise DataError(f"sample {self.id} has empty text")


class Corpus(Sequence[LabeledSample]):
    """Immutable, id-indexed collection of samples."""

    def __init__(self, samples: Iterable[LabeledSample]):
        self._samples = tuple(samples)
        self._index = {}
        for pos, s in enumerate(self._samples):
            if s.id in self._index:
                raise DataError(f"duplicate sample id {s.id}")
            self._index[s.id] = pos

    def __len__(self):
        return len(self._samples)

    def __getitem__(self, i):
        return self._samples[i]

    def __iter__(self) -> Iterator[LabeledSample]:
        return iter(self._samples)

    def __repr__(self):
        return f"Corpus(n={len(self)})"

    @property
    def ids(self) -> list[int]:
        return [s.id for s in self._samples]

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self._samples]

    @property
    def labels(self) -> list[EmotionLabel]:
        return [s.label for s in self._samples]

    def get(self, sample_id: int) -> LabeledSample:
        return self._samples[self._index[sample_id]]

    def __contains__(self, sample_id) -> bool:
        return sample_id in self._index

    def subset(self, ids: Iterable[int]) -> "Corpus":
        return Corpus(self.get(i) for i in ids)

    def by_label(self, label: EmotionLabel) -> "Corpus":
        return Corpus(s for s in self._samples if s.label == label)

    def __add__(self, other: "Corpus") -> "Corpus":
        return Corpus(list(self) + list(other))

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for s in self._samples:
            h.update(f"{s.id}\t{int(s.label)}\t{s.origin.value}\t{s.text}\n".encode())
        return h.hexdigest()


# ---------------------------------------------------------------------------
# ingestion


def _read_lines(path) -> list[str]:
    raw = Path(path).read_bytes().decode("utf-8")
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    if not lines:
        raise EmptyFile(f"{path} is empty")
    return lines


def load_tweeteval(text_path, labels_path, id_offset: int = 0) -> Corpus:
    """Read a line-aligned ``*_text.txt`` / ``*_labels.txt`` pair.

    Sample ids are 0-based line numbers (plus ``id_offset``).
    """
    labels = _read_lines(labels_path)
    texts = _read_lines(text_path)
    if len(texts) != len(labels):
        raise LineCountMismatch(len(texts), len(labels))
    samples = []
    for i, (text, raw) in enumerate(zip(texts, labels)):
        try:
            code = int(raw.strip())
        except ValueError:
            raise InvalidLabel(i, raw) from None
        if code not in range(N_CLASSES):
            raise InvalidLabel(i, raw)
        samples.append(LabeledSample(id_offset + i, text, EmotionLabel(code)))
    return Corpus(samples)


def load_tweeteval_dir(data_dir, splits=("train", "val", "test")) -> Corpus:
    """Concatenate the named TweetEval splits found in ``data_dir``.

    Ids keep counting across files, so the full emotion task yields
    ids 0..5051. Missing splits are skipped; at least one must exist.
    """
    data_dir = Path(data_dir)
    parts = []
    offset = 0
    for split in splits:
        tp, lp = data_dir / f"{split}_text.txt", data_dir / f"{split}_labels.txt"
        if not tp.exists() and not lp.exists():
            continue
        part = load_tweeteval(tp, lp, id_offset=offset)
        offset += len(part)
        parts.extend(part)
    if not parts:
        raise EmptyFile(f"no TweetEval split files found in {data_dir}")
    return Corpus(parts)


def write_tweeteval(corpus: Corpus, data_dir, split="train"):
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    with open(data_dir / f"{split}_text.txt", "w", encoding="utf-8", newline="\n") as f:
        for s in corpus:
            f.write(s.text.replace("\n", " ") + "\n")
    with open(data_dir / f"{split}_labels.txt", "w", encoding="utf-8", newline="\n") as f:
        for s in corpus:
            f.write(f"{int(s.label)}\n")


# ---------------------------------------------------------------------------
# preprocessing

TABLE_C1_KEYWORDS = (
    "angry", "fuming", "outrage", "anger", "bully",
    "love", "blues", "happy", "new", "hilarious", "birthday",
    "worry", "fears", "start", "optimism",
    "sadness", "depression", "lost", "depressing",
)

DEFAULT_PRESERVE = frozenset(
    ("not", "never", "can't", "won't", "don't", "isn't",
     "very", "extremely", "quite", "so", "really") + TABLE_C1_KEYWORDS
)


@dataclass(frozen=True)
class PreprocessConfig:
    strip_mentions: bool = True
    strip_hashtag_symbol: bool = True
    strip_non_alphanumeric: bool = True
    preserve_list: frozenset = field(default=DEFAULT_PRESERVE)
    lowercase: bool = True

    def to_dict(self):
        return {
            "strip_mentions": self.strip_mentions,
            "strip_hashtag_symbol": self.strip_hashtag_symbol,
            "strip_non_alphanumeric": self.strip_non_alphanumeric,
            "preserve_list": sorted(self.preserve_list),
            "lowercase": self.lowercase,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "preserve_list" in d:
            d["preserve_list"] = frozenset(d["preserve_list"])
        return cls(**d)


_MENTION = re.compile(r"@\w+")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'"})
_NON_ALNUM = re.compile(r"[\W_]+")
_EDGE_PUNCT = re.compile(r"^[\W_]+|[\W_]+$")


def preprocess(text: str, config: PreprocessConfig = PreprocessConfig()) -> list[str]:
    text = text.translate(_APOSTROPHES)
    if config.lowercase:
        text = text.lower()
    if config.strip_mentions:
        text = _MENTION.sub(" ", text)
    if config.strip_hashtag_symbol:
        text = text.replace("#", " ")
    if not config.strip_non_alphanumeric:
        return text.split()

    protected = {p.lower() for p in config.preserve_list}
    tokens = []
    for chunk in text.split():
        core = _EDGE_PUNCT.sub("", chunk)
        if core.lower() in protected:
            tokens.append(core)
            continue
        # in-word apostrophes join ("it's" -> "its"); other symbols separate
        tokens.extend(_NON_ALNUM.sub(" ", chunk.replace("'", "")).split())
    return tokens


# ---------------------------------------------------------------------------
# splits


@dataclass(frozen=True)
class SplitPlan:
    holdout_ids: tuple
    seed_ids: tuple
    pool_ids: tuple  # in draw order
    seed_size: int
    increment_size: int
    n_increments: int
    rng_seed: int
    fold: int = 0
    stratified: bool = True

    def __post_init__(self):
        h, s, p = set(self.holdout_ids), set(self.seed_ids), set(self.pool_ids)
        if h & s or h & p or s & p:
            raise DataError("split partitions overlap")
        if len(self.seed_ids) != self.seed_size:
            raise DataError("seed_ids does not match seed_size")

    def to_dict(self):
        return {
            "holdout_ids": list(self.holdout_ids),
            "seed_ids": list(self.seed_ids),
            "pool_ids": list(self.pool_ids),
            "seed_size": self.seed_size,
            "increment_size": self.increment_size,
            "n_increments": self.n_increments,
            "rng_seed": self.rng_seed,
            "fold": self.fold,
            "stratified": self.stratified,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("holdout_ids", "seed_ids", "pool_ids"):
            d[k] = tuple(d[k])
        return cls(**d)

    def content_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def _stratified_quota(counts: dict, total: int, n: int) -> dict:
    """Largest-remainder allocation of ``n`` draws proportional to ``counts``."""
    exact = {c: n * k / total for c, k in counts.items()}
    quota = {c: int(np.floor(v)) for c, v in exact.items()}
    left = n - sum(quota.values())
    order = sorted(counts, key=lambda c: (-(exact[c] - quota[c]), int(c)))
    for c in order[:left]:
        quota[c] += 1
    return quota


def _draw_stratified(by_class: dict, quota: dict, rng) -> tuple[list, dict]:
    picked, rest = [], {}
    for c in sorted(by_class):
        ids = by_class[c]
        k = min(quota.get(c, 0), len(ids))
        perm = rng.permutation(len(ids))
        picked.extend(ids[j] for j in perm[:k])
        rest[c] = sorted(ids[j] for j in perm[k:])
    return picked, rest


def make_splits(corpus: Corpus, holdout_n: int, seed_n: int, increment: int,
                n_increments: int, rng_seed: int, fold: int = 0) -> SplitPlan:
    """Label-stratified holdout/seed/pool partition.

    The holdout depends on ``rng_seed`` only, so every fold (and every seed
    size) evaluates on the same samples; seed and pool composition vary with
    ``fold``.
    """
    n = len(corpus)
    if min(holdout_n, seed_n, increment, n_increments) < 0 or seed_n < 1:
        raise InsufficientData("sizes must be non-negative and seed_n >= 1")
    if holdout_n + seed_n + increment * n_increments > n:
        raise InsufficientData(
            f"need {holdout_n + seed_n + increment * n_increments} samples, corpus has {n}")

    by_class: dict = {}
    for s in sorted(corpus, key=lambda s: s.id):
        by_class.setdefault(s.label, []).append(s.id)
    counts = {c: len(v) for c, v in by_class.items()}

    holdout_rng = np.random.default_rng([rng_seed, 0])
    holdout, rest = _draw_stratified(by_class, _stratified_quota(counts, n, holdout_n), holdout_rng)

    fold_rng = np.random.default_rng([rng_seed, 1, fold])
    seed_quota = _stratified_quota(counts, n, seed_n)
    seed, rest = _draw_stratified(rest, seed_quota, fold_rng)
    if len(seed) < seed_n:  # a class ran dry: top up uniformly
        remaining = sorted(i for ids in rest.values() for i in ids)
        extra = fold_rng.choice(len(remaining), seed_n - len(seed), replace=False)
        seed.extend(remaining[j] for j in sorted(extra))
    seed_set = set(seed)
    pool = sorted(i for ids in rest.values() for i in ids if i not in seed_set)
    pool = [pool[j] for j in fold_rng.permutation(len(pool))]

    return SplitPlan(
        holdout_ids=tuple(sorted(holdout)),
        seed_ids=tuple(sorted(seed)),
        pool_ids=tuple(int(i) for i in pool),
        seed_size=seed_n,
        increment_size=increment,
        n_increments=n_increments,
        rng_seed=rng_seed,
        fold=fold,
    )


def class_distribution(corpus) -> dict:
    """Fraction of samples per emotion; accepts samples or bare labels."""
    labels = [s.label if isinstance(s, LabeledSample) else EmotionLabel(s) for s in corpus]
    if not labels:
        raise EmptyCorpus("cannot compute class distribution of an empty corpus")
    counts = Counter(labels)
    n = len(labels)
    return {c: counts[c] / n for c in sorted(counts)}
