"""Exact Shapley attributions for boosted tree ensembles.

The game explained is the path-dependent one: the value of a coalition ``S``
is the tree's expected output when features in ``S`` follow ``x`` and every
other split is averaged using the training covers of its children.

For a single leaf that game is a product over the distinct features on the
leaf's path: a feature in ``S`` contributes ``o`` (1 if ``x`` satisfies all of
that feature's conditions on the path, else 0) and a feature outside ``S``
contributes ``z`` (the product of its cover ratios). The Shapley value of a
product game has a closed form through the polynomial
``prod_k (z_k + o_k t)``; removing one factor by synthetic division gives each
feature's weighted coalition sum. This is the same extend/unwind arithmetic as
the recursive TreeSHAP algorithm, arranged so that all samples and all leaves
of a tree are processed as array operations.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.sparse as sp

from .errors import EmptyInput, MissingCover, TooManyFeatures
from .gbdt import LEAF, Ensemble, Tree, _as_matrix

MAX_BRUTE_FORCE_FEATURES = 20


@dataclass
class ShapExplanation:
    phi: np.ndarray  # (n_classes, n_features)
    base: np.ndarray  # (n_classes,)

    def margin(self) -> np.ndarray:
        return self.phi.sum(axis=1) + self.base


@dataclass
class GlobalImportance:
    importance: np.ndarray  # (n_classes, n_features), mean |phi|
    n_samples: int
    terms: tuple | None = None

    def for_class(self, c) -> np.ndarray:
        return self.importance[int(c)]


# ---------------------------------------------------------------------------
# per-tree path tables


@dataclass
class _PathTable:
    leaf_value: np.ndarray  # (L,)
    slot_feature: np.ndarray  # (L, D), -1 for padding
    zero_frac: np.ndarray  # (L, D), 1.0 for padding
    step_node: np.ndarray  # (S,) internal node of each path edge
    step_left: np.ndarray  # (S,) edge goes to the left child
    step_slot: np.ndarray  # (S,) flat index leaf * D + slot
    depth: int
    expected: float


def _check_covers(tree: Tree):
    if np.any(~np.isfinite(tree.cover)) or np.any(tree.cover <= 0):
        raise MissingCover("every node needs a positive training cover")


def _path_table(tree: Tree) -> _PathTable:
    _check_covers(tree)
    leaves = []
    stack = [(0, [])]
    while stack:
        node, path = stack.pop()
        if tree.left[node] == LEAF:
            leaves.append((node, path))
            continue
        l, r = int(tree.left[node]), int(tree.right[node])
        stack.append((r, path + [(node, False, r)]))
        stack.append((l, path + [(node, True, l)]))
    leaves.sort()

    D = 0
    rows = []
    for leaf, path in leaves:
        slots = {}
        for node, _, _ in path:
            slots.setdefault(int(tree.feature[node]), len(slots))
        D = max(D, len(slots))
        rows.append((leaf, path, slots))
    D = max(D, 1)

    L = len(rows)
    leaf_value = np.array([tree.value[leaf] for leaf, _, _ in rows], dtype=float)
    slot_feature = np.full((L, D), -1, dtype=np.int64)
    zero_frac = np.ones((L, D))
    step_node, step_left, step_slot = [], [], []
    expected = 0.0
    for li, (leaf, path, slots) in enumerate(rows):
        reach = 1.0
        for f, k in slots.items():
            slot_feature[li, k] = f
        for node, went_left, child in path:
            k = slots[int(tree.feature[node])]
            ratio = tree.cover[child] / tree.cover[node]
            zero_frac[li, k] *= ratio
            reach *= ratio
            step_node.append(node)
            step_left.append(went_left)
            step_slot.append(li * D + k)
        expected += reach * tree.value[leaf]
    return _PathTable(leaf_value, slot_feature, zero_frac,
                      np.asarray(step_node, dtype=np.int64), np.asarray(step_left, dtype=bool),
                      np.asarray(step_slot, dtype=np.int64), D, expected)


@lru_cache(maxsize=None)
def _shapley_weights(d: int) -> np.ndarray:
    return np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d)
                     for s in range(d)])


def _tree_phi(tree: Tree, table: _PathTable, Xcols: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Attributions per (sample, leaf, slot) for one tree; shape (n, L, D)."""
    n = Xcols.shape[0]
    L, D = table.slot_feature.shape
    if len(table.step_node) == 0:
        return np.zeros((n, L, D))

    nodes = table.step_node
    x = Xcols[:, cols[tree.feature[nodes]]]
    went_hot = (x < tree.threshold[nodes]) == table.step_left  # (n, S)

    # o = 1 iff every path condition of that slot's feature is satisfied
    incidence = sp.csr_matrix((np.ones(len(nodes)), (np.arange(len(nodes)), table.step_slot)),
                              shape=(len(nodes), L * D))
    misses = (incidence.T @ (~went_hot).T.astype(float)).T
    o = (misses == 0).reshape(n, L, D).astype(float)
    z = np.broadcast_to(table.zero_frac, (n, L, D))

    # coefficients of prod_k (z_k + o_k t)
    C = np.zeros((n, L, D + 1))
    C[..., 0] = 1.0
    for k in range(D):
        nxt = C * z[..., k:k + 1]
        nxt[..., 1:] += C[..., :-1] * o[..., k:k + 1]
        C = nxt

    w = _shapley_weights(D)
    out = np.empty((n, L, D))
    for j in range(D):
        zj, oj = z[..., j], o[..., j]
        # divide out (z_j + o_j t): top-down when o_j = 1, plain scaling when o_j = 0
        Q = np.empty((n, L, D))
        Q[..., D - 1] = C[..., D]
        for s in range(D - 1, 0, -1):
            Q[..., s - 1] = C[..., s] - zj * Q[..., s]
        Q_zero = C[..., :D] / zj[..., None]
        Q = np.where(oj[..., None] == 1.0, Q, Q_zero)
        out[..., j] = (oj - zj) * (Q @ w)
    return out * table.leaf_value[None, :, None]


def _explain_compact(model: Ensemble, X, chunk: int = 256):
    """Attributions restricted to used features.

    Returns (phi of shape (n, K, U), used feature ids, base of shape (K,)).
    """
    M, _ = _as_matrix(X)
    n = M.shape[0]
    K = model.n_classes
    used = np.asarray(model.used_features(), dtype=np.int64)
    U = len(used)
    cols = np.zeros(int(used.max()) + 1 if U else 1, dtype=np.int64)
    cols[used] = np.arange(U)

    base = np.asarray(model.base_score, dtype=float).copy()
    tables = []
    for c, tree in model.trees:
        t = _path_table(tree)
        base[c] += model.learning_rate * t.expected
        tables.append((c, tree, t))

    phi = np.zeros((n, K, U))
    if U == 0:
        return phi, used, base
    Xd_all = M[:, used].toarray()
    for lo in range(0, n, chunk):
        Xd = Xd_all[lo:lo + chunk]
        for c, tree, t in tables:
            if len(t.step_node) == 0:
                continue
            contrib = _tree_phi(tree, t, Xd, cols)  # (m, L, D)
            L, D = t.slot_feature.shape
            flat = t.slot_feature.ravel()
            real = flat >= 0
            scatter = sp.csr_matrix((np.ones(real.sum()), (np.flatnonzero(real), cols[flat[real]])),
                                    shape=(L * D, U))
            phi[lo:lo + chunk, c, :] += model.learning_rate * (
                scatter.T @ contrib.reshape(len(Xd), L * D).T).T
    return phi, used, base


def _n_features(model: Ensemble, M) -> int:
    return M.shape[1] if model.n_features is None else max(model.n_features, M.shape[1])


def tree_shap(model: Ensemble, x) -> ShapExplanation:
    """Exact path-dependent Shapley values of the raw per-class margins."""
    M, _ = _as_matrix(x)
    if M.shape[0] != 1:
        raise ValueError("tree_shap explains one sample; use tree_shap_many for batches")
    phi_c, used, base = _explain_compact(model, M)
    phi = np.zeros((model.n_classes, _n_features(model, M)))
    phi[:, used] = phi_c[0]
    return ShapExplanation(phi, base)


def tree_shap_many(model: Ensemble, X) -> list[ShapExplanation]:
    M, _ = _as_matrix(X)
    phi_c, used, base = _explain_compact(model, M)
    F = _n_features(model, M)
    out = []
    for i in range(M.shape[0]):
        phi = np.zeros((model.n_classes, F))
        phi[:, used] = phi_c[i]
        out.append(ShapExplanation(phi, base.copy()))
    return out


def global_importance(model: Ensemble, X, terms=None) -> GlobalImportance:
    M, _ = _as_matrix(X)
    if M.shape[0] == 0:
        raise EmptyInput("explanation set is empty")
    phi_c, used, _ = _explain_compact(model, M)
    imp = np.zeros((model.n_classes, _n_features(model, M)))
    imp[:, used] = np.abs(phi_c).mean(axis=0)
    return GlobalImportance(imp, M.shape[0], None if terms is None else tuple(terms))


# ---------------------------------------------------------------------------
# oracle


def _expectation(tree: Tree, node: int, x: np.ndarray, known: frozenset) -> float:
    if tree.left[node] == LEAF:
        return float(tree.value[node])
    f = int(tree.feature[node])
    l, r = int(tree.left[node]), int(tree.right[node])
    if f in known:
        return _expectation(tree, l if x[f] < tree.threshold[node] else r, x, known)
    return (tree.cover[l] * _expectation(tree, l, x, known)
            + tree.cover[r] * _expectation(tree, r, x, known)) / tree.cover[node]


def brute_force_shap(model: Ensemble, x) -> ShapExplanation:
    """Shapley values by enumerating every coalition of the used features."""
    M, _ = _as_matrix(x)
    for _, tree in model.trees:
        _check_covers(tree)
    used = model.used_features()
    m = len(used)
    if m > MAX_BRUTE_FORCE_FEATURES:
        raise TooManyFeatures(f"model uses {m} features (limit {MAX_BRUTE_FORCE_FEATURES})")
    F = _n_features(model, M)
    xd = M.toarray()[0]
    if len(xd) < F:
        xd = np.pad(xd, (0, F - len(xd)))
    K = model.n_classes

    value = {}
    for bits in product((0, 1), repeat=m):
        known = frozenset(f for f, b in zip(used, bits) if b)
        v = np.asarray(model.base_score, dtype=float).copy()
        for c, tree in model.trees:
            v[c] += model.learning_rate * _expectation(tree, 0, xd, known)
        value[known] = v

    phi = np.zeros((K, F))
    for i in used:
        others = [f for f in used if f != i]
        for bits in product((0, 1), repeat=m - 1):
            S = frozenset(f for f, b in zip(others, bits) if b)
            s = len(S)
            weight = math.factorial(s) * math.factorial(m - s - 1) / math.factorial(m)
            phi[:, i] += weight * (value[S | {i}] - value[S])
    return ShapExplanation(phi, value[frozenset()])


# ---------------------------------------------------------------------------
# export


def export_csv(path, explanations, sample_ids, terms=None, class_names=None, min_abs=0.0):
    """Write non-zero attributions as ``sample_id,class,feature,phi`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["sample_id", "class", "feature", "phi"])
        for sid, ex in zip(sample_ids, explanations):
            for c in range(ex.phi.shape[0]):
                cname = class_names[c] if class_names else c
                for j in np.flatnonzero(np.abs(ex.phi[c]) > min_abs):
                    name = terms[j] if terms is not None else int(j)
                    w.writerow([sid, cname, name, repr(float(ex.phi[c, j]))])
