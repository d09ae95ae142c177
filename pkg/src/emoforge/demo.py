"""Deterministic tweet-like corpus in TweetEval layout for offline runs.

The texts are template sentences over per-emotion word lists with shared
filler vocabulary and cross-emotion noise, so a classifier can learn
something but not everything. Class priors roughly follow the emotion task
(anger most frequent, optimism rarest).
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import EMOTIONS, Corpus, EmotionLabel, LabeledSample, Origin, write_tweeteval

PRIORS = {EmotionLabel.anger: 0.42, EmotionLabel.joy: 0.22,
          EmotionLabel.optimism: 0.09, EmotionLabel.sadness: 0.27}

CUE_WORDS = {
    EmotionLabel.anger: """
        angry furious rage outrage mad annoyed pissed livid hate disgusting terrible
        ridiculous unacceptable offended bitter fuming awful stupid idiots shameful insult
        rude worst sick tired enough seriously nonsense irritating infuriating""",
    EmotionLabel.joy: """
        happy love amazing awesome smile laughing fun lovely excited delighted wonderful
        great cheerful glad blessed beautiful hilarious enjoy party celebrate yay perfect
        sunshine best adorable""",
    EmotionLabel.optimism: """
        hope optimism believe future tomorrow better faith positive confident grow
        chance dream keep going progress possible patience strength forward goals
        trust stronger brighter""",
    EmotionLabel.sadness: """
        sad depressed lonely crying tears miss heartbroken lost gloomy sorrow hurt
        broken alone empty grief unhappy pain down sorry regret mourning blue tired
        nobody""",
}

NEUTRAL = """
    today work people phone coffee morning night weekend friend family school game
    team news class bus train music movie show dinner lunch weather city home week
    year time thing life world guy girl dog cat office boss traffic meeting update
    season episode album song street store money food car rain sun""".split()

FUNCTION = """
    the a i my is it so this that and to of in on for with just at me you be was
    not all about when what really""".split()

TEMPLATES = (
    "{f} {c} {n} {f} {c}",
    "{c} {f} {n} {n}",
    "{f} {f} {c} {n} {c} {f} {n}",
    "@user {f} {c} {n} #{c}",
    "{n} {f} {c} {f} {n} {f} {c}",
    "{f} {n} {c} {c} {f}",
    "{c} {c} {f} {n} {f} {n} #{n}",
)


def _words(spec: str) -> list[str]:
    return spec.split()


def make_demo_corpus(n: int = 1500, seed: int = 0, noise: float = 0.25) -> Corpus:
    """``n`` labeled tweets; a cue word comes from another emotion with prob ``noise``."""
    rng = np.random.default_rng([seed, 2024])
    cues = {e: _words(CUE_WORDS[e]) for e in EMOTIONS}
    probs = np.array([PRIORS[e] for e in EMOTIONS])
    labels = rng.choice(len(EMOTIONS), size=n, p=probs / probs.sum())
    samples, seen = [], set()
    while len(samples) < n:
        e = EmotionLabel(int(labels[len(samples)]))
        template = TEMPLATES[int(rng.integers(len(TEMPLATES)))]
        out = []
        for part in template.split():
            prefix = ""
            if part.startswith("#") or part.startswith("@"):
                prefix, part = part[0], part[1:]
            if part == "{c}":
                src = e
                if rng.random() < noise:
                    src = EmotionLabel(int(rng.integers(len(EMOTIONS))))
                word = cues[src][int(rng.integers(len(cues[src])))]
            elif part == "{n}":
                word = NEUTRAL[int(rng.integers(len(NEUTRAL)))]
            elif part == "{f}":
                word = FUNCTION[int(rng.integers(len(FUNCTION)))]
            else:
                word = part
            out.append(prefix + word)
        text = " ".join(out)
        if text in seen:
            continue
        seen.add(text)
        samples.append(LabeledSample(len(samples), text, e, Origin.real))
    return Corpus(samples)


def write_demo_dir(data_dir, n: int = 1500, seed: int = 0) -> Path:
    data_dir = Path(data_dir)
    write_tweeteval(make_demo_corpus(n, seed), data_dir, "train")
    return data_dir
