"""Synthetic tweet generation: prompt rendering, LLM backends, parsing, caching."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .corpus import SYNTHETIC_ID_OFFSET, EmotionLabel, LabeledSample, Origin, PreprocessConfig, preprocess
from .errors import BackendError, ConfigError, CountMismatch, DuplicateSaturation, Unparseable

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "EMOFORGE_API_KEY"


@dataclass(frozen=True)
class GenerationConfig:
    temperature: float = 0.8
    max_tokens: int = 1500
    batch_size: int = 20
    inter_call_delay_ms: int = 2000
    model_id: str = "claude-3-5-sonnet-20241022"
    max_retries: int = 3
    n_exemplars: int = 10

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError("temperature must lie in [0, 2]")
        if self.inter_call_delay_ms < 0:
            raise ConfigError("inter_call_delay_ms must be >= 0")
        if self.batch_size < 1 or self.max_tokens < 1 or self.max_retries < 0:
            raise ConfigError("batch_size and max_tokens must be >= 1, max_retries >= 0")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PromptSpec:
    emotion: EmotionLabel
    batch_size: int
    exemplars: tuple = ()
    include_keywords: tuple = ()
    exclude_keywords: tuple = ()

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass
class SyntheticBatch:
    samples: list
    prompt_hash: str
    backend_id: str
    timestamp: str
    prompt_hashes: list = field(default_factory=list)
    n_calls: int = 0

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.samples]


# ---------------------------------------------------------------------------
# prompts

SYSTEM_TEMPLATE = (
    "You are an expert at generating realistic social media content expressing {emotion}. "
    "Write diverse, authentic-sounding tweets that use hashtags, mentions (@user), "
    "casual expressions and informal language."
)

PROMPT_TEMPLATE = """I need to generate {n} realistic {emotion} tweets for a machine learning emotion detection dataset.

{exemplar_block}

{include_block}

{exclude_block}

REQUIREMENTS:
1. Generate exactly {n} {emotion} tweets
2. Make them realistic social media posts with natural language
3. Use hashtags, mentions (@user), and casual expressions when appropriate
4. Each tweet should clearly express {emotion}
5. Number each tweet (1., 2., 3., etc.)
6. Do not create files. Just give the tweet.
7. Do not repeat the themes of the tweet. Be imaginative and put yourself in the circumstances of humans.
8. You are not allowed to give the same tweets that you have already provided.
9. Sample keywords randomly and make some tweets informal, with typos, slang

Generate the {emotion} tweets now:"""

_INCLUDE_HEAD = "KEYWORDS TO INCLUDE (use these concepts naturally and randomly): "
_EXCLUDE_HEAD = "KEYWORDS TO AVOID (don't emphasize these): "


def _one_line(text: str) -> str:
    return " ".join(text.split())


def build_system_prompt(emotion) -> str:
    return SYSTEM_TEMPLATE.format(emotion=EmotionLabel.parse(emotion).name)


def build_prompt(spec: PromptSpec) -> str:
    emotion = EmotionLabel.parse(spec.emotion).name
    exemplar_text = "\n".join(f"- {_one_line(t)}" for t in spec.exemplars)
    include_text = ", ".join(spec.include_keywords)
    exclude_text = ", ".join(spec.exclude_keywords)
    return PROMPT_TEMPLATE.format(
        n=spec.batch_size,
        emotion=emotion,
        exemplar_block=f"EXAMPLES OF REAL {emotion.upper()} TWEETS:\n{exemplar_text}" if exemplar_text else "",
        include_block=f"\n{_INCLUDE_HEAD}{include_text}" if include_text else "",
        exclude_block=f"\n{_EXCLUDE_HEAD}{exclude_text}" if exclude_text else "",
    )


def prompt_hash(system: str, user: str) -> str:
    return hashlib.sha256(f"{system}\x00{user}".encode()).hexdigest()


_NUMBERED = re.compile(r"^\s*(\d+)[.)]\s*(.*)$")


def parse_numbered_tweets(raw: str, expected_n: int) -> list[str]:
    """Pull ``1. text`` / ``2) text`` lines out of a completion."""
    if not raw or not raw.strip():
        raise Unparseable("empty completion")
    found = []
    for line in raw.splitlines():
        m = _NUMBERED.match(line)
        if m and m.group(2).strip():
            found.append((int(m.group(1)), m.group(2).strip()))
    if not found:
        raise Unparseable("no numbered lines in completion")
    found.sort(key=lambda p: p[0])
    if len(found) != expected_n:
        raise CountMismatch(len(found), expected_n)
    return [text for _, text in found]


# ---------------------------------------------------------------------------
# backends


class Backend(Protocol):
    backend_id: str

    def complete(self, system: str, user: str, config: GenerationConfig,
                 request_index: int = 0) -> str: ...


_FILLERS = (
    "#vibecheck", "#feelsday", "#moodboard", "#lifeupdate", "#justsaying",
    "#realtalk", "#thoughtsoftheday", "#dailyfeels", "#storytime", "#honestmoment",
)
# casual tokens added in both prompt modes
_SLANG = ("ngl", "tbh", "fr", "smh", "istg", "lowkey", "bruh", "omg", "fml", "rn", "irl", "idk")
_SKELETONS = (
    "cannot stop thinking about {kw} today",
    "honestly {kw} is all i feel right now",
    "another day another {kw} moment",
    "woke up and it was {kw} again",
    "this whole week has been pure {kw}",
    "me and my {kw} mood tonight",
)


def _prompt_field(user: str, head: str) -> list[str]:
    for line in user.splitlines():
        if line.startswith(head):
            return [t.strip() for t in line[len(head):].split(",") if t.strip()]
    return []


class MockBackend:
    """Offline stand-in for an LLM.

    Reads the rendered prompt like a model would: batch size, emotion,
    exemplar lines and keyword lists. Each tweet is a span of an exemplar with
    avoided keywords dropped, plus one or two requested keywords; without
    keywords a stock hashtag is appended instead. The random stream is keyed by
    the prompt with its keyword lines removed, so guided and unguided prompts
    built from the same exemplars share their spans.
    """

    def __init__(self, seed: int = 0, preprocess_config: PreprocessConfig = PreprocessConfig()):
        self.seed = int(seed)
        self.backend_id = f"mock-{self.seed}"
        self.pp = preprocess_config
        self.calls = 0

    def complete(self, system: str, user: str, config: GenerationConfig,
                 request_index: int = 0) -> str:
        self.calls += 1
        m = re.search(r"Generate exactly (\d+) (\w+) tweets", user)
        if not m:
            raise BackendError("mock backend could not read the batch size")
        n = int(m.group(1))
        include = _prompt_field(user, _INCLUDE_HEAD)
        exclude = set(_prompt_field(user, _EXCLUDE_HEAD))
        exemplars, in_block = [], False
        for line in user.splitlines():
            if line.startswith("EXAMPLES OF REAL "):
                in_block = True
            elif in_block and line.startswith("- "):
                exemplars.append(line[2:])
            elif in_block:
                in_block = False

        skeleton_key = "\n".join(l for l in user.splitlines()
                                 if not l.startswith((_INCLUDE_HEAD, _EXCLUDE_HEAD)))
        digest = hashlib.sha256(f"{self.seed}\x00{request_index}\x00{skeleton_key}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))

        tweets, seen = [], set()
        for i in range(n):
            text = self._one(rng, exemplars, include, exclude)
            k = 0
            while text in seen:  # resolved without extra draws to keep modes aligned
                text = f"{text} {_SLANG[(i + k) % len(_SLANG)]}"
                k += 1
            seen.add(text)
            tweets.append(text)
        return "Here you go:\n" + "\n".join(f"{i + 1}. {t}" for i, t in enumerate(tweets))

    def _allowed(self, word: str, exclude: set) -> bool:
        toks = preprocess(word, self.pp)
        return bool(toks) and not (set(toks) & exclude)

    def _one(self, rng, exemplars, include, exclude) -> str:
        # every tweet consumes the same draws whatever the prompt mode, so
        # guided and unguided outputs stay aligned span for span
        ex_a, ex_b, span_a, span_b, start_a, start_b = rng.random(6)
        second, slang_on, slang_pick, slang_pos = rng.random(4)
        pos_a, pos_b, pick_a, pick_b, n_kw, sk = rng.random(6)
        skeleton = None
        if exemplars:
            words = self._span(exemplars, ex_a, span_a, start_a, 3, 9, exclude)
            if second < 0.35 and len(exemplars) > 1:
                words += self._span(exemplars, ex_b, span_b, start_b, 2, 5, exclude)
        else:
            words = []
            skeleton = _SKELETONS[int(sk * len(_SKELETONS))]
        if include:
            kws = [include[int(pick_a * len(include))]]
            if n_kw > 0.5 and len(include) > 1:
                kws.append(include[int(pick_b * len(include))])
            if skeleton is not None:
                words = skeleton.format(kw=kws[0]).split() + [f"#{k}" for k in kws[1:]]
            else:
                for pos, kw in zip((pos_a, pos_b), kws):
                    words.insert(int(pos * (len(words) + 1)), kw)
        else:
            if skeleton is not None:
                words = skeleton.format(kw="feelings").split()
            words.append(_FILLERS[int(pick_a * len(_FILLERS))])
        if slang_on < 0.5:
            words.insert(int(slang_pos * (len(words) + 1)), _SLANG[int(slang_pick * len(_SLANG))])
        return " ".join(words) if words else "just one of those days"

    def _span(self, exemplars, which, length, start, lo, hi, exclude) -> list[str]:
        words = exemplars[int(which * len(exemplars))].split()
        n = lo + int(length * (hi - lo))
        first = int(start * (max(len(words) - n, 0) + 1))
        return [w for w in words[first:first + n] if self._allowed(w, exclude)]


def mock_backend(seed: int = 0) -> MockBackend:
    return MockBackend(seed)


class HttpBackend:
    """Chat-style HTTP completion endpoint.

    ``style="messages"`` sends ``{model, max_tokens, temperature, system,
    messages}`` and reads ``content[*].text``; ``style="chat"`` sends the
    system prompt as the first message and reads ``choices[0].message.content``.
    Both response shapes are accepted either way.
    """

    def __init__(self, endpoint_url: str, model_id: str | None = None,
                 auth_env_var: str = DEFAULT_API_KEY_ENV, style: str = "messages",
                 timeout: float = 120.0, transport=None):
        import httpx

        key = os.environ.get(auth_env_var)
        if not key:
            raise BackendError(f"API key missing: set the {auth_env_var} environment variable")
        if style not in ("messages", "chat"):
            raise ConfigError(f"unknown HTTP backend style {style!r}")
        self.endpoint_url = endpoint_url
        self.model_id = model_id
        self.style = style
        self.backend_id = f"http-{model_id or 'default'}"
        self._client = httpx.Client(timeout=timeout, transport=transport, headers={
            "Authorization": f"Bearer {key}",
            "x-api-key": key,
            "anthropic-version": "2023-06-01",
            "content-type": "application/json",
        })

    def request_body(self, system: str, user: str, config: GenerationConfig) -> dict:
        body = {
            "model": self.model_id or config.model_id,
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
        }
        if self.style == "messages":
            body["system"] = system
            body["messages"] = [{"role": "user", "content": user}]
        else:
            body["messages"] = [{"role": "system", "content": system},
                                {"role": "user", "content": user}]
        return body

    def complete(self, system: str, user: str, config: GenerationConfig,
                 request_index: int = 0) -> str:
        import httpx

        try:
            resp = self._client.post(self.endpoint_url, json=self.request_body(system, user, config))
            resp.raise_for_status()
            data = resp.json()
        except (httpx.HTTPError, ValueError) as e:
            raise BackendError(f"HTTP backend failed: {e}") from e
        try:
            if isinstance(data.get("content"), list):
                return "".join(part.get("text", "") for part in data["content"])
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, AttributeError) as e:
            raise BackendError(f"unexpected response shape: {str(data)[:200]}") from e

    def close(self):
        self._client.close()


def http_backend(endpoint_url: str, model_id: str | None = None,
                 auth_env_var: str = DEFAULT_API_KEY_ENV, **kwargs) -> HttpBackend:
    return HttpBackend(endpoint_url, model_id, auth_env_var, **kwargs)


# ---------------------------------------------------------------------------
# cache


class SyntheticCache:
    """JSON-lines files of parsed tweets, one file per prompt hash."""

    def __init__(self, root):
        self.root = Path(root)

    def _path(self, backend_id: str, phash: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9_.-]", "_", backend_id)
        return self.root / safe / f"{phash}.jsonl"

    def get(self, backend_id: str, phash: str) -> list[str] | None:
        path = self._path(backend_id, phash)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as f:
            return [json.loads(line)["text"] for line in f if line.strip()]

    def put(self, backend_id: str, phash: str, emotion, texts: Sequence[str]):
        path = self._path(backend_id, phash)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            for t in texts:
                f.write(json.dumps({"emotion": EmotionLabel.parse(emotion).name, "text": t,
                                    "prompt_hash": phash, "backend_id": backend_id},
                                   sort_keys=True) + "\n")
        os.replace(tmp, path)


# ---------------------------------------------------------------------------
# driver


def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


class _ExemplarRotation:
    """Windows of a shuffled exemplar list, reshuffled on wrap-around."""

    def __init__(self, exemplars, k, rng):
        self.items = list(dict.fromkeys(exemplars))
        self.k = min(k, len(self.items))
        self.rng = rng
        self.order, self.pos = [], 0

    def next(self) -> list[str]:
        if self.k == 0:
            return []
        out = []
        while len(out) < self.k:
            if self.pos >= len(self.order):
                self.order = list(self.rng.permutation(len(self.items)))
                self.pos = 0
            idx = self.order[self.pos]
            self.pos += 1
            if self.items[idx] not in out:
                out.append(self.items[idx])
        return out


class _Caller:
    def __init__(self, backend, config, cache, sleep):
        self.backend, self.config, self.cache, self.sleep = backend, config, cache, sleep
        self.n_calls = 0
        self.repeats = {}

    def _call(self, system, user, index):
        if self.n_calls and self.config.inter_call_delay_ms:
            self.sleep(self.config.inter_call_delay_ms / 1000.0)
        self.n_calls += 1
        return self.backend.complete(system, user, self.config, request_index=index)

    def run(self, emotion, system, user, n) -> tuple[list[str], str]:
        phash = prompt_hash(system, user)
        # the k-th identical request is a fresh sample, cached under its own key
        index = self.repeats.get(phash, 0)
        self.repeats[phash] = index + 1
        key = phash if index == 0 else f"{phash}.{index}"
        if self.cache is not None:
            hit = self.cache.get(self.backend.backend_id, key)
            if hit is not None and len(hit) == n:
                return hit, phash
        last = None
        for attempt in range(self.config.max_retries + 1):
            try:
                texts = parse_numbered_tweets(self._call(system, user, index), n)
                if self.cache is not None:
                    self.cache.put(self.backend.backend_id, key, emotion, texts)
                return texts, phash
            except BackendError as e:
                last = e
                log.warning("generation attempt %d failed: %s", attempt + 1, e)
        raise BackendError(f"backend failed after {self.config.max_retries + 1} attempts: {last}")


def generate_synthetic(backend, emotion, n_total: int, exemplars: Sequence[str] = (),
                       keywords=None, config: GenerationConfig = GenerationConfig(), *,
                       rng=None, cache: SyntheticCache | None = None, sleep=time.sleep,
                       origin: Origin | None = None, id_start: int | None = None) -> SyntheticBatch:
    """Generate ``n_total`` distinct synthetic tweets for one emotion.

    With ``keywords`` (a KeywordSet) the prompts carry its positive and
    negative lists; without it they carry exemplars only.
    """
    if n_total < 1:
        raise ConfigError("n_total must be >= 1")
    emotion = EmotionLabel.parse(emotion)
    if origin is None:
        origin = Origin.synthetic_shap if keywords is not None else Origin.synthetic_naive
    if id_start is None:
        id_start = SYNTHETIC_ID_OFFSET[origin]
    rng = np.random.default_rng(0) if rng is None else rng
    include = tuple(keywords.positive) if keywords is not None else ()
    exclude = tuple(keywords.negative) if keywords is not None else ()
    rotation = _ExemplarRotation(exemplars, config.n_exemplars, rng)
    system = build_system_prompt(emotion)
    caller = _Caller(backend, config, cache, sleep)

    texts, seen, hashes = [], set(), []

    def request_round(need):
        for k in range(math.ceil(need / config.batch_size)):
            size = min(config.batch_size, need - k * config.batch_size)
            spec = PromptSpec(emotion, size, tuple(rotation.next()), include, exclude)
            got, phash = caller.run(emotion, system, build_prompt(spec), size)
            hashes.append(phash)
            for t in got:
                key = _normalize(t)
                if key not in seen:
                    seen.add(key)
                    texts.append(t)

    request_round(n_total)
    if len(texts) < n_total:
        request_round(n_total - len(texts))
    if len(texts) < n_total:
        raise DuplicateSaturation(f"only {len(texts)} distinct tweets after re-request, need {n_total}")

    samples = [LabeledSample(id_start + i, t, emotion, origin) for i, t in enumerate(texts[:n_total])]
    return SyntheticBatch(
        samples=samples,
        prompt_hash=hashlib.sha256("".join(hashes).encode()).hexdigest(),
        backend_id=backend.backend_id,
        timestamp=datetime.now(timezone.utc).isoformat(),
        prompt_hashes=hashes,
        n_calls=caller.n_calls,
    )
