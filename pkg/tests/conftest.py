import numpy as np
import pytest

from emoforge.gbdt import LEAF, Ensemble, Tree


def random_tree(rng, n_features, max_depth, cover=None):
    """Random tree with consistent integer covers (children sum to parent)."""
    left, right, feature, threshold, value, covers = [], [], [], [], [], []

    def grow(depth, c):
        node = len(left)
        for arr in (left, right, feature, threshold, value, covers):
            arr.append(0)
        covers[node] = c
        if depth == max_depth or c < 2 or (depth > 0 and rng.random() < 0.25):
            left[node] = right[node] = LEAF
            feature[node] = -1
            value[node] = float(rng.normal())
            return node
        feature[node] = int(rng.integers(n_features))
        threshold[node] = float(rng.uniform(0.1, 0.9))
        cl = int(rng.integers(1, c))
        left[node] = grow(depth + 1, cl)
        right[node] = grow(depth + 1, c - cl)
        return node

    grow(0, int(cover if cover is not None else rng.integers(10, 200)))
    return Tree(np.array(left), np.array(right), np.array(feature), np.array(threshold, dtype=float),
                np.array(value, dtype=float), np.array(covers, dtype=float))


def random_ensemble(rng, n_classes=2, n_trees=3, n_features=8, max_depth=3, lr=None):
    trees = [(int(rng.integers(n_classes)), random_tree(rng, n_features, max_depth))
             for _ in range(n_trees)]
    return Ensemble(n_classes, trees, float(lr if lr is not None else rng.uniform(0.05, 1.0)),
                    rng.normal(size=n_classes), n_features=n_features)


def stump(feature, threshold, lo, hi, cover_lo=5.0, cover_hi=5.0):
    return Tree(np.array([1, LEAF, LEAF]), np.array([2, LEAF, LEAF]), np.array([feature, -1, -1]),
                np.array([threshold, 0.0, 0.0]), np.array([0.0, lo, hi]),
                np.array([cover_lo + cover_hi, cover_lo, cover_hi]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


HAND_TERMS = ("angry", "fuming", "happy", "sad", "hope", "the")
# rows: 3 anger, 3 joy, 3 optimism, 3 sadness; values are precomputed tf-idf weights
HAND_X = np.array([
    [0.6, 0.3, 0.0, 0.0, 0.0, 0.3],
    [0.9, 0.0, 0.0, 0.3, 0.0, 0.3],
    [0.3, 0.3, 0.0, 0.0, 0.0, 0.3],
    [0.0, 0.0, 0.6, 0.0, 0.0, 0.3],
    [0.9, 0.0, 0.6, 0.0, 0.0, 0.3],
    [0.0, 0.0, 0.6, 0.0, 0.0, 0.3],
    [0.0, 0.0, 0.0, 0.0, 0.6, 0.3],
    [0.0, 0.0, 0.0, 0.0, 0.9, 0.3],
    [0.0, 0.0, 0.0, 0.0, 0.6, 0.3],
    [0.0, 0.0, 0.0, 0.9, 0.0, 0.3],
    [0.0, 0.0, 0.0, 0.9, 0.0, 0.3],
    [0.0, 0.0, 0.0, 0.6, 0.0, 0.3],
])
HAND_Y = np.repeat([0, 1, 2, 3], 3)
# anger minus rest, worked by hand:
#   angry .6-.1=.5  fuming .2-0=.2  happy 0-.2=-.2  sad .1-.2667=-.1667  hope 0-.2333=-.2333  the 0
HAND_ANGER_SCORES = {"angry": 0.5, "fuming": 0.2, "happy": -0.2, "sad": 0.1 - 2.4 / 9,
                     "hope": -2.1 / 9, "the": 0.0}
HAND_ANGER_POS = ["angry", "fuming"]
HAND_ANGER_NEG = ["hope", "happy"]


def two_mean_oracle(X, y, target):
    """Explicit loops: mean over target rows minus mean over all other rows."""
    out = []
    for j in range(X.shape[1]):
        tgt = [X[i][j] for i in range(len(y)) if y[i] == target]
        rest = [X[i][j] for i in range(len(y)) if y[i] != target]
        out.append(sum(tgt) / len(tgt) - sum(rest) / len(rest))
    return out


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, from the ``criterion`` user property."""
    lines = {}
    for outcome in ("passed", "failed", "skipped", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []) or [])
            if "criterion" not in props:
                continue
            if rep.when != "call" and not (outcome in ("skipped", "error") or rep.failed):
                continue
            word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP", "error": "FAIL"}[outcome]
            lines[props["criterion"]] = f"criterion {props['criterion']}: {word}  {props.get('title', '')}"
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
