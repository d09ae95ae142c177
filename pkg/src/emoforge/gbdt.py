"""Multiclass gradient-boosted decision trees with a softmax objective.

Each boosting round fits one regression tree per class on the softmax
gradients ``g = p - y`` and hessians ``h = p (1 - p)``. Splits are exact
greedy over the sorted feature values present at a node; features absent
from a sparse row are treated as explicit zeros. A node routes ``x`` left iff
``x[feature] < threshold``.

Trees are grown level by level and the split search for all nodes of a level
runs as one vectorized pass over the non-zero entries of the training matrix.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, LengthMismatch, MissingClass

LEAF = -1
_HESS_FLOOR = 1e-16


@dataclass(frozen=True)
class TrainConfig:
    n_rounds: int = 200
    max_depth: int = 6
    learning_rate: float = 0.1
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise ConfigError("lambda, gamma and min_child_weight must be non-negative")

    def to_dict(self):
        return asdict(self)


@dataclass
class Tree:
    """Flat array tree. Node 0 is the root; leaves have ``left == -1``.

    ``cover`` holds the number of training samples that reached each node;
    ``value`` is the leaf weight (unscaled by the learning rate).
    """

    left: np.ndarray
    right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] == LEAF

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.left[node] != LEAF:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def used_features(self) -> set[int]:
        return {int(f) for f, l in zip(self.feature, self.left) if l != LEAF}

    def to_dict(self) -> dict:
        nodes = []
        for i in range(self.n_nodes):
            node = {"id": i, "cover": float(self.cover[i]), "value": float(self.value[i])}
            if self.left[i] != LEAF:
                node.update(feature=int(self.feature[i]), threshold=float(self.threshold[i]),
                            left=int(self.left[i]), right=int(self.right[i]))
            nodes.append(node)
        return {"nodes": nodes}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        nodes = sorted(d["nodes"], key=lambda n: n["id"])
        n = len(nodes)
        left = np.full(n, LEAF, dtype=np.int64)
        right = np.full(n, LEAF, dtype=np.int64)
        feature = np.full(n, -1, dtype=np.int64)
        threshold = np.zeros(n)
        value = np.zeros(n)
        cover = np.full(n, np.nan)
        for i, node in enumerate(nodes):
            if node["id"] != i:
                raise ValueError("node ids must be dense 0..n-1")
            value[i] = node.get("value", 0.0)
            if node.get("cover") is not None:
                cover[i] = node["cover"]
            if "left" in node:
                left[i], right[i] = node["left"], node["right"]
                feature[i], threshold[i] = node["feature"], node["threshold"]
        return cls(left, right, feature, threshold, value, cover)

    @classmethod
    def leaf(cls, value: float, cover: float = 1.0) -> "Tree":
        return cls(np.array([LEAF]), np.array([LEAF]), np.array([-1]),
                   np.zeros(1), np.array([float(value)]), np.array([float(cover)]))


@dataclass
class Ensemble:
    n_classes: int
    trees: list  # (class index, Tree)
    learning_rate: float
    base_score: np.ndarray
    train_config: TrainConfig | None = None
    n_features: int | None = None
    degenerate: bool = False
    train_loss: list = field(default_factory=list)

    def used_features(self) -> list[int]:
        used = set()
        for _, tree in self.trees:
            used |= tree.used_features()
        return sorted(used)

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "learning_rate": self.learning_rate,
            "base_score": [float(b) for b in self.base_score],
            "n_features": self.n_features,
            "degenerate": self.degenerate,
            "train_config": None if self.train_config is None else self.train_config.to_dict(),
            "trees": [{"class": int(c), **t.to_dict()} for c, t in self.trees],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Ensemble":
        cfg = d.get("train_config")
        return cls(
            n_classes=d["n_classes"],
            trees=[(t["class"], Tree.from_dict(t)) for t in d["trees"]],
            learning_rate=d["learning_rate"],
            base_score=np.asarray(d["base_score"], dtype=float),
            train_config=None if cfg is None else TrainConfig(**cfg),
            n_features=d.get("n_features"),
            degenerate=d.get("degenerate", False),
        )

    @classmethod
    def from_json(cls, text: str) -> "Ensemble":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# prediction


def _as_matrix(X, n_features=None):
    """Return (csr matrix, was_single_row)."""
    from .tfidf import SparseVector

    if isinstance(X, SparseVector):
        m = sp.csr_matrix((X.values, X.indices, [0, len(X.indices)]), shape=(1, X.dim))
        return m, True
    if sp.issparse(X):
        return sp.csr_matrix(X), False
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        return sp.csr_matrix(arr[None, :]), True
    return sp.csr_matrix(arr), False


def _leaf_index(tree: Tree, cols: np.ndarray, Xd: np.ndarray) -> np.ndarray:
    """Leaf reached by every row of the dense block ``Xd``.

    ``cols`` maps model feature ids to columns of ``Xd``.
    """
    n = Xd.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    active = tree.left[node] != LEAF
    while active.any():
        nd = node[active]
        x = Xd[rows[active], cols[tree.feature[nd]]]
        node[active] = np.where(x < tree.threshold[nd], tree.left[nd], tree.right[nd])
        active = tree.left[node] != LEAF
    return node


def _dense_used(model: Ensemble, X: sp.csr_matrix):
    used = np.asarray(model.used_features(), dtype=np.int64)
    cols = np.zeros(max(int(used.max()) + 1, 1) if len(used) else 1, dtype=np.int64)
    cols[used] = np.arange(len(used))
    Xd = X[:, used].toarray() if len(used) else np.zeros((X.shape[0], 0))
    return cols, Xd


def predict_margins(model: Ensemble, X) -> np.ndarray:
    """Raw per-class scores ``base + lr * sum(leaf values)``."""
    M, single = _as_matrix(X)
    out = np.tile(np.asarray(model.base_score, dtype=float), (M.shape[0], 1))
    if model.trees and model.learning_rate != 0:
        cols, Xd = _dense_used(model, M)
        for c, tree in model.trees:
            out[:, c] += model.learning_rate * tree.value[_leaf_index(tree, cols, Xd)]
    return out[0] if single else out


def softmax(margins: np.ndarray) -> np.ndarray:
    z = margins - margins.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict_proba(model: Ensemble, X) -> np.ndarray:
    return softmax(predict_margins(model, X))


def predict_label(model: Ensemble, X):
    """Argmax class; ties go to the lowest class index."""
    from .corpus import EmotionLabel

    labels = np.argmax(predict_margins(model, X), axis=-1)
    if np.ndim(labels) == 0:
        return EmotionLabel(int(labels)) if model.n_classes == 4 else int(labels)
    return labels


def log_loss(model: Ensemble, X, y) -> float:
    p = predict_proba(model, X)
    y = np.asarray(y, dtype=np.int64)
    return float(-np.mean(np.log(np.clip(p[np.arange(len(y)), y], 1e-300, None))))


# ---------------------------------------------------------------------------
# training


class _Entries:
    """Non-zero entries of the training matrix in COO form."""

    def __init__(self, X: sp.csr_matrix):
        X = sp.csr_matrix(X, dtype=float, copy=True)
        X.eliminate_zeros()
        X.sort_indices()
        self.n_rows, self.n_features = X.shape
        self.row = np.repeat(np.arange(self.n_rows), np.diff(X.indptr))
        self.feat = X.indices.astype(np.int64)
        self.val = X.data


def _has_variation(E: _Entries) -> bool:
    if len(E.feat) == 0:
        return False
    counts = np.bincount(E.feat, minlength=E.n_features)
    if np.any((counts > 0) & (counts < E.n_rows)):
        return True
    order = np.lexsort((E.val, E.feat))
    f, v = E.feat[order], E.val[order]
    return bool(np.any((f[1:] == f[:-1]) & (v[1:] != v[:-1])))


def _grow_tree(E: _Entries, g: np.ndarray, h: np.ndarray, cfg: TrainConfig):
    """Grow one tree; returns (Tree, leaf node of every training row)."""
    lam, gamma, mcw = cfg.reg_lambda, cfg.gamma, cfg.min_child_weight
    n, F = E.n_rows, E.n_features

    left, right, feature, threshold, value, cover = [LEAF], [LEAF], [-1], [0.0], [0.0], [float(n)]
    node_G, node_H, node_C = [float(g.sum())], [float(h.sum())], [float(n)]
    node_of_row = np.zeros(n, dtype=np.int64)  # -1 once the row sits in a finished leaf
    leaf_of_row = np.zeros(n, dtype=np.int64)
    level = [0]

    for depth in range(cfg.max_depth + 1):
        if not level:
            break
        G = np.asarray(node_G)
        H = np.asarray(node_H)
        C = np.asarray(node_C)
        split_feat = {}
        if depth < cfg.max_depth:
            split_feat = _best_splits(E, g, h, node_of_row, level, G, H, C, lam, gamma, mcw)

        next_level = []
        go_left = None
        if split_feat:
            # default route for rows without an entry for the split feature (value 0)
            zero_left = np.zeros(len(left), dtype=bool)
            split_f = np.full(len(left), -1, dtype=np.int64)
            split_t = np.zeros(len(left))
            for nd, (f, t) in split_feat.items():
                zero_left[nd] = 0.0 < t
                split_f[nd], split_t[nd] = f, t
            active = node_of_row >= 0
            go_left = np.zeros(n, dtype=bool)
            go_left[active] = zero_left[node_of_row[active]]
            er_node = np.where(node_of_row[E.row] >= 0, node_of_row[E.row], 0)
            hit = (node_of_row[E.row] >= 0) & (split_f[er_node] == E.feat)
            go_left[E.row[hit]] = E.val[hit] < split_t[er_node[hit]]

        new_node_of_row = node_of_row.copy()
        for nd in level:
            if nd in split_feat:
                f, t = split_feat[nd]
                l_id, r_id = len(left), len(left) + 1
                for _ in range(2):
                    left.append(LEAF); right.append(LEAF); feature.append(-1)
                    threshold.append(0.0); value.append(0.0); cover.append(0.0)
                    node_G.append(0.0); node_H.append(0.0); node_C.append(0.0)
                left[nd], right[nd], feature[nd], threshold[nd] = l_id, r_id, f, t
                in_node = node_of_row == nd
                new_node_of_row[in_node & go_left] = l_id
                new_node_of_row[in_node & ~go_left] = r_id
                next_level += [l_id, r_id]
            else:
                value[nd] = -node_G[nd] / (node_H[nd] + lam)
                in_node = node_of_row == nd
                leaf_of_row[in_node] = nd
                new_node_of_row[in_node] = -1
        node_of_row = new_node_of_row

        if next_level:
            active = node_of_row >= 0
            ids = node_of_row[active]
            m = len(left)
            sG = np.bincount(ids, weights=g[active], minlength=m)
            sH = np.bincount(ids, weights=h[active], minlength=m)
            sC = np.bincount(ids, minlength=m)
            for nd in next_level:
                node_G[nd], node_H[nd], node_C[nd] = float(sG[nd]), float(sH[nd]), float(sC[nd])
                cover[nd] = float(sC[nd])
        level = next_level

    tree = Tree(np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
                np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=float),
                np.asarray(value, dtype=float), np.asarray(cover, dtype=float))
    return tree, leaf_of_row


def _best_splits(E, g, h, node_of_row, level, G, H, C, lam, gamma, mcw) -> dict:
    """Best (feature, threshold) for every splittable node in ``level``."""
    F = E.n_features
    e_node = node_of_row[E.row]
    keep = e_node >= 0
    if not keep.any():
        return {}
    e_node, e_feat, e_val = e_node[keep], E.feat[keep], E.val[keep]
    e_g, e_h = g[E.row[keep]], h[E.row[keep]]

    # one implicit zero-valued entry per (node, feature) pair standing in for absent rows
    pair = e_node * F + e_feat
    upair, inv = np.unique(pair, return_inverse=True)
    p_cnt = np.bincount(inv)
    p_g = np.bincount(inv, weights=e_g)
    p_h = np.bincount(inv, weights=e_h)
    p_node, p_feat = upair // F, upair % F
    zc = C[p_node] - p_cnt
    has_zero = zc > 0

    node = np.concatenate([e_node, p_node[has_zero]])
    feat = np.concatenate([e_feat, p_feat[has_zero]])
    val = np.concatenate([e_val, np.zeros(has_zero.sum())])
    gg = np.concatenate([e_g, (G[p_node] - p_g)[has_zero]])
    hh = np.concatenate([e_h, (H[p_node] - p_h)[has_zero]])
    cc = np.concatenate([np.ones(len(e_val)), zc[has_zero]])

    order = np.lexsort((val, feat, node))
    node, feat, val = node[order], feat[order], val[order]
    gg, hh, cc = gg[order], hh[order], cc[order]

    seg_key = node * F + feat
    seg_start = np.concatenate(([True], seg_key[1:] != seg_key[:-1]))
    start_idx = np.flatnonzero(seg_start)
    seg_of = np.cumsum(seg_start) - 1

    def seg_prefix(x):
        cs = np.cumsum(x)
        before = np.concatenate(([0.0], cs))[start_idx]
        return cs - before[seg_of]

    GL, HL, CL = seg_prefix(gg), seg_prefix(hh), seg_prefix(cc)
    Gn, Hn, Cn = G[node], H[node], C[node]
    GR, HR, CR = Gn - GL, Hn - HL, Cn - CL

    valid = np.zeros(len(val), dtype=bool)
    valid[:-1] = (seg_key[1:] == seg_key[:-1]) & (val[1:] > val[:-1])
    valid &= (CL >= mcw) & (CR >= mcw) & (CL > 0) & (CR > 0)
    if not valid.any():
        return {}

    gain = np.full(len(val), -np.inf)
    v = valid
    gain[v] = 0.5 * (GL[v] ** 2 / (HL[v] + lam) + GR[v] ** 2 / (HR[v] + lam)
                     - Gn[v] ** 2 / (Hn[v] + lam)) - gamma

    # first maximum per node (entries are ordered node, feature, value)
    node_start = np.flatnonzero(np.concatenate(([True], node[1:] != node[:-1])))
    best_gain = np.maximum.reduceat(gain, node_start)
    out = {}
    for k, s in enumerate(node_start):
        if not best_gain[k] > 0:
            continue
        e = s + int(np.argmax(gain[s:(node_start[k + 1] if k + 1 < len(node_start) else len(gain))]))
        lo, hi = val[e], val[e + 1]
        t = lo + (hi - lo) / 2.0
        if not lo < t <= hi:
            t = hi
        out[int(node[e])] = (int(feat[e]), float(t))
    return out


def train(X, y, config: TrainConfig = TrainConfig(), n_classes: int | None = None,
          record_loss: bool = False) -> Ensemble:
    """Fit a softmax boosted ensemble. Deterministic given data and config."""
    from .corpus import N_CLASSES

    M, _ = _as_matrix(X)
    y = np.asarray([int(v) for v in y], dtype=np.int64)
    K = N_CLASSES if n_classes is None else int(n_classes)
    if M.shape[0] != len(y):
        raise LengthMismatch(f"{M.shape[0]} rows but {len(y)} labels")
    counts = np.bincount(y, minlength=K) if len(y) else np.zeros(K)
    if len(counts) > K or np.any(counts[:K] == 0):
        missing = [c for c in range(K) if c >= len(counts) or counts[c] == 0]
        raise MissingClass(f"classes {missing} absent from training labels")

    n = len(y)
    base = np.log(counts / n)
    E = _Entries(M)
    model = Ensemble(K, [], config.learning_rate, base, config, E.n_features)
    if K > 1 and not _has_variation(E):
        warnings.warn("all features are constant; returning a base-score-only ensemble")
        model.degenerate = True
        return model

    Y = np.zeros((n, K))
    Y[np.arange(n), y] = 1.0
    margins = np.tile(base, (n, 1))
    lr = config.learning_rate

    def loss():
        p = softmax(margins)
        return float(-np.mean(np.log(np.clip(p[np.arange(n), y], 1e-300, None))))

    if record_loss:
        model.train_loss.append(loss())
    for _ in range(config.n_rounds):
        p = softmax(margins)
        for c in range(K):
            g = p[:, c] - Y[:, c]
            h = np.maximum(p[:, c] * (1.0 - p[:, c]), _HESS_FLOOR)
            tree, leaf_of_row = _grow_tree(E, g, h, config)
            margins[:, c] += lr * tree.value[leaf_of_row]
            model.trees.append((c, tree))
        if record_loss:
            model.train_loss.append(loss())
    return model
