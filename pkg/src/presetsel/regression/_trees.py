"""Regression trees and tree ensembles on numpy.

Trees are grown with variance-reduction (SSE) splits and stored packed into
flat arrays shared by the whole ensemble: ``feature[i] < 0`` marks a leaf,
``left``/``right`` hold absolute node indices, ``roots`` the per-tree entry
points.  The packed layout makes prediction a handful of vectorized gather
steps regardless of ensemble size, which keeps single-chunk inference cheap.

Split conventions: samples with x <= threshold go left; exact splits use the
midpoint between adjacent distinct sorted values (clamped to the lower value
when rounding lands on the upper); randomized splits draw the threshold
uniformly from [min, max) of the node's values.
"""

from __future__ import annotations

import numpy as np

_SSE_EPS = 1e-12


def _node_sse(total1: float, total2: float, n: int) -> float:
    return total2 - total1 * total1 / n


def _best_exact_split(Xs: np.ndarray, ys: np.ndarray, min_leaf: int):
    """Best SSE split over all columns of Xs; returns
    (col, threshold, order_column, n_left, sse_decrease) or None."""
    n = Xs.shape[0]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    yso = ys[order]
    c1 = np.cumsum(yso, axis=0)
    c2 = np.cumsum(yso * yso, axis=0)
    total1 = c1[-1, 0]
    total2 = c2[-1, 0]

    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    s1l = c1[:-1]
    s2l = c2[:-1]
    sse = (s2l - s1l * s1l / nl) + ((total2 - s2l) - (total1 - s1l) ** 2 / nr)
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        pos_ok = (nl >= min_leaf) & (nr >= min_leaf)
        valid &= pos_ok
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    flat = int(np.argmin(sse))
    j, col = divmod(flat, Xs.shape[1])
    lo = xs[j, col]
    hi = xs[j + 1, col]
    thr = lo + (hi - lo) / 2.0
    if thr >= hi:  # adjacent floats can round the midpoint up
        thr = lo
    parent_sse = _node_sse(total1, total2, n)
    return col, float(thr), order[:, col], j + 1, parent_sse - float(sse[j, col])


def _best_random_split(Xs: np.ndarray, ys: np.ndarray, min_leaf: int, rng: np.random.Generator):
    """Extremely-randomized split: one uniform threshold per column, best SSE
    among them; returns (col, threshold, left_mask, sse_decrease) or None."""
    n = Xs.shape[0]
    lo = Xs.min(axis=0)
    hi = Xs.max(axis=0)
    splittable = hi > lo
    if not splittable.any():
        return None
    thr = rng.uniform(lo, hi)
    mask = Xs <= thr
    nl = mask.sum(axis=0).astype(np.float64)
    nr = n - nl
    ok = splittable & (nl >= min_leaf) & (nr >= min_leaf)
    if not ok.any():
        return None
    y2 = ys * ys
    s1 = ys @ mask
    s2 = y2 @ mask
    total1 = float(ys.sum())
    total2 = float(y2.sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        sse = (s2 - s1 * s1 / nl) + ((total2 - s2) - (total1 - s1) ** 2 / nr)
    sse = np.where(ok, sse, np.inf)
    col = int(np.argmin(sse))
    parent_sse = _node_sse(total1, total2, n)
    return col, float(thr[col]), mask[:, col], parent_sse - float(sse[col])


class _TreeArrays:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_idx: np.ndarray,
    *,
    max_depth: int,
    min_samples_leaf: int,
    max_features: int,
    rng: np.random.Generator | None,
    exact: bool,
    importances: np.ndarray,
) -> _TreeArrays:
    n_features = X.shape[1]
    tree = _TreeArrays()
    root = tree.add()
    stack = [(sample_idx, 0, root)]
    while stack:
        idx, depth, slot = stack.pop()
        y_node = y[idx]
        n = idx.shape[0]
        tree.value[slot] = float(y_node.mean())
        if depth >= max_depth or n < 2 * min_samples_leaf:
            continue
        total1 = float(y_node.sum())
        total2 = float((y_node * y_node).sum())
        if _node_sse(total1, total2, n) <= _SSE_EPS:
            continue
        if max_features < n_features:
            feats = np.sort(rng.choice(n_features, size=max_features, replace=False))
        else:
            feats = np.arange(n_features)
        Xs = X[np.ix_(idx, feats)]
        if exact:
            found = _best_exact_split(Xs, y_node, min_samples_leaf)
            if found is None:
                continue
            col, thr, order, n_left, decrease = found
            left_idx = idx[order[:n_left]]
            right_idx = idx[order[n_left:]]
        else:
            found = _best_random_split(Xs, y_node, min_samples_leaf, rng)
            if found is None:
                continue
            col, thr, left_mask, decrease = found
            left_idx = idx[left_mask]
            right_idx = idx[~left_mask]
        gfeat = int(feats[col])
        importances[gfeat] += max(decrease, 0.0)
        tree.feature[slot] = gfeat
        tree.threshold[slot] = thr
        left_slot = tree.add()
        right_slot = tree.add()
        tree.left[slot] = left_slot
        tree.right[slot] = right_slot
        stack.append((left_idx, depth + 1, left_slot))
        stack.append((right_idx, depth + 1, right_slot))
    return tree


def _pack(trees: list[_TreeArrays]) -> dict:
    roots = []
    feature, threshold, left, right, value = [], [], [], [], []
    offset = 0
    for t in trees:
        roots.append(offset)
        n = len(t.feature)
        feature.extend(t.feature)
        threshold.extend(t.threshold)
        # child indices become absolute
        left.extend(c + offset if c >= 0 else -1 for c in t.left)
        right.extend(c + offset if c >= 0 else -1 for c in t.right)
        value.extend(t.value)
        offset += n
    return {
        "feature": np.asarray(feature, dtype=np.int32),
        "threshold": np.asarray(threshold, dtype=np.float64),
        "left": np.asarray(left, dtype=np.int32),
        "right": np.asarray(right, dtype=np.int32),
        "value": np.asarray(value, dtype=np.float64),
        "roots": np.asarray(roots, dtype=np.int32),
    }


def _resolve_max_features(max_features, n_features: int) -> int:
    if isinstance(max_features, (int, np.integer)) and not isinstance(max_features, bool):
        m = int(max_features)
    else:
        m = int(round(float(max_features) * n_features))
    return min(max(m, 1), n_features)


def fit_decision_tree(X, y, hp, rng) -> dict:
    importances = np.zeros(X.shape[1], dtype=np.float64)
    tree = _grow_tree(
        X,
        y,
        np.arange(X.shape[0]),
        max_depth=hp["max_depth"],
        min_samples_leaf=hp["min_samples_leaf"],
        max_features=X.shape[1],
        rng=rng,
        exact=True,
        importances=importances,
    )
    packed = _pack([tree])
    packed.update({"kind": "forest", "n_trees": 1, "importances": importances})
    return packed


def fit_random_forest(X, y, hp, rng) -> dict:
    n = X.shape[0]
    max_features = _resolve_max_features(hp["max_features"], X.shape[1])
    importances = np.zeros(X.shape[1], dtype=np.float64)
    trees = []
    for _ in range(hp["n_trees"]):
        idx = rng.integers(0, n, size=n) if hp["bootstrap"] else np.arange(n)
        trees.append(
            _grow_tree(
                X,
                y,
                idx,
                max_depth=hp["max_depth"],
                min_samples_leaf=hp["min_samples_leaf"],
                max_features=max_features,
                rng=rng,
                exact=True,
                importances=importances,
            )
        )
    packed = _pack(trees)
    packed.update({"kind": "forest", "n_trees": hp["n_trees"], "importances": importances})
    return packed


def fit_extra_trees(X, y, hp, rng) -> dict:
    n = X.shape[0]
    max_features = _resolve_max_features(hp["max_features"], X.shape[1])
    importances = np.zeros(X.shape[1], dtype=np.float64)
    all_idx = np.arange(n)
    trees = []
    for _ in range(hp["n_trees"]):
        trees.append(
            _grow_tree(
                X,
                y,
                all_idx,
                max_depth=hp["max_depth"],
                min_samples_leaf=hp["min_samples_leaf"],
                max_features=max_features,
                rng=rng,
                exact=False,
                importances=importances,
            )
        )
    packed = _pack(trees)
    packed.update({"kind": "forest", "n_trees": hp["n_trees"], "importances": importances})
    return packed


def fit_gradient_boosting(X, y, hp, rng) -> dict:
    n = X.shape[0]
    init = float(y.mean())
    pred = np.full(n, init)
    lr = hp["learning_rate"]
    importances = np.zeros(X.shape[1], dtype=np.float64)
    all_idx = np.arange(n)
    trees = []
    for _ in range(hp["n_rounds"]):
        residual = y - pred
        tree = _grow_tree(
            X,
            residual,
            all_idx,
            max_depth=hp["max_depth"],
            min_samples_leaf=hp["min_samples_leaf"],
            max_features=X.shape[1],
            rng=rng,
            exact=True,
            importances=importances,
        )
        trees.append(tree)
        packed_one = _pack([tree])
        pred += lr * _traverse(packed_one, X)[:, 0]
    packed = _pack(trees)
    packed.update(
        {
            "kind": "boosted",
            "n_trees": hp["n_rounds"],
            "init": init,
            "learning_rate": lr,
            "importances": importances,
        }
    )
    return packed


def _traverse(params: dict, X: np.ndarray) -> np.ndarray:
    """Per-tree leaf values for every sample; shape (n_samples, n_trees)."""
    feature = params["feature"]
    threshold = params["threshold"]
    left = params["left"]
    right = params["right"]
    n = X.shape[0]
    pos = np.broadcast_to(params["roots"], (n, params["roots"].shape[0])).astype(np.int64).copy()
    while True:
        f = feature[pos]
        active = f >= 0
        if not active.any():
            break
        rows, cols = np.nonzero(active)
        cur = pos[rows, cols]
        xv = X[rows, f[rows, cols]]
        go_left = xv <= threshold[cur]
        pos[rows, cols] = np.where(go_left, left[cur], right[cur])
    return params["value"][pos]


def predict_tree_ensemble(params: dict, X: np.ndarray) -> np.ndarray:
    leaves = _traverse(params, X)
    if params["kind"] == "boosted":
        return params["init"] + params["learning_rate"] * leaves.sum(axis=1)
    return leaves.mean(axis=1)


def per_tree_predictions(params: dict, X: np.ndarray) -> np.ndarray:
    """Raw per-tree leaf values (n_samples, n_trees); test/inspection hook."""
    return _traverse(params, X)
