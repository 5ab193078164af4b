"""One-vs-rest gradient-boosted regression trees on the logistic loss.

Each class gets its own additive model of depth-limited regression trees.
Trees are grown greedily on the negative gradient (y - p) by squared-error
(variance) reduction; leaf values take one L2-damped Newton step,
``sum(y - p) / (sum(p * (1 - p)) + reg_lambda)``. Split thresholds are searched over at
most ``max_bins`` quantile cut points per feature, which is exhaustive
whenever a feature has fewer distinct values than that.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .base import LabeledSet, TrainedModel


@dataclass(frozen=True)
class GbtParams:
    n_trees: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    subsample: float = 1.0
    min_samples_leaf: int = 1
    reg_lambda: float = 1.0
    max_bins: int = 255
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1:
            raise ValueError("n_trees and max_depth must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must lie in (0, 1]")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be non-negative")
        if self.max_bins < 2:
            raise ValueError("max_bins must be >= 2")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class Tree:
    """Flat binary tree; ``feature == -1`` marks a leaf. Left branch: ``x <= threshold``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nd = node[rows]
            go_left = x[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist()
                for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(np.array(d["feature"], dtype=np.int64),
                   np.array(d["threshold"], dtype=np.float64),
                   np.array(d["left"], dtype=np.int64),
                   np.array(d["right"], dtype=np.int64),
                   np.array(d["value"], dtype=np.float64))


def _cut_points(column: np.ndarray, max_bins: int) -> np.ndarray:
    values = np.unique(column)
    if len(values) <= max_bins:
        return (values[:-1] + values[1:]) / 2.0
    qs = np.quantile(column, np.linspace(0, 1, max_bins + 1)[1:-1])
    return np.unique(qs)


class _Binned:
    """Per-feature cut points and the bin code of every training value."""

    def __init__(self, x: np.ndarray, max_bins: int):
        self.cuts = [_cut_points(x[:, j], max_bins) for j in range(x.shape[1])]
        self.n_bins = max(len(c) for c in self.cuts) + 1
        codes = np.empty(x.shape, dtype=np.intp)
        for j, c in enumerate(self.cuts):
            # code = number of cut points strictly below the value, so x <= cuts[b] <=> code <= b
            codes[:, j] = np.searchsorted(c, x[:, j], side="left")
        self.flat_codes = codes + np.arange(x.shape[1]) * self.n_bins
        self.n_cuts = np.array([len(c) for c in self.cuts])


def _grow_tree(binned: _Binned, rows: np.ndarray, resid: np.ndarray, hess: np.ndarray,
               max_depth: int, min_leaf: int, reg_lambda: float) -> Tree:
    feature, threshold, left, right, value = [], [], [], [], []
    d = binned.flat_codes.shape[1]
    nb = binned.n_bins
    # bin b of feature j is a usable split only when cut point b exists
    valid = np.arange(nb)[None, :] < binned.n_cuts[:, None]

    def new_node():
        for lst in (feature, threshold, left, right, value):
            lst.append(0)
        feature[-1] = -1
        return len(feature) - 1

    def leaf_value(idx):
        h = hess[idx].sum() + reg_lambda
        return float(resid[idx].sum() / max(h, 1e-12))

    stack = [(new_node(), rows, 0)]
    while stack:
        node, idx, depth = stack.pop()
        value[node] = leaf_value(idx)
        n = len(idx)
        if depth >= max_depth or n < 2 * min_leaf:
            continue
        r = resid[idx]
        codes = binned.flat_codes[idx].ravel()
        sums = np.bincount(codes, weights=np.repeat(r, d), minlength=d * nb).reshape(d, nb)
        counts = np.bincount(codes, minlength=d * nb).reshape(d, nb)
        s_left = np.cumsum(sums, axis=1)
        n_left = np.cumsum(counts, axis=1)
        total = r.sum()
        n_right = n - n_left
        ok = valid & (n_left >= min_leaf) & (n_right >= min_leaf)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = (s_left ** 2 / n_left + (total - s_left) ** 2 / n_right - total ** 2 / n)
        gain = np.where(ok, gain, -np.inf)
        best = int(np.argmax(gain))
        if not gain.flat[best] > 1e-12:
            continue
        j, b = divmod(best, nb)
        go_left = binned.flat_codes[idx, j] - j * nb <= b
        feature[node] = j
        threshold[node] = float(binned.cuts[j][b])
        lnode, rnode = new_node(), new_node()
        left[node], right[node] = lnode, rnode
        stack.append((rnode, idx[~go_left], depth + 1))
        stack.append((lnode, idx[go_left], depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value, dtype=np.float64))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(eq=False)
class GbtModel(TrainedModel):
    base_score: np.ndarray  # (n_classes,)
    learning_rate: float
    trees: list  # trees[class] -> list of Tree

    kind = "gbt"

    def decision_function(self, x, n_trees: int | None = None) -> np.ndarray:
        x = self._check_input(x)
        scores = np.tile(self.base_score, (len(x), 1))
        for c, class_trees in enumerate(self.trees):
            for tree in class_trees[:n_trees]:
                scores[:, c] += self.learning_rate * tree.predict(x)
        return scores

    def predict_proba(self, x, n_trees: int | None = None) -> np.ndarray:
        p = _sigmoid(self.decision_function(x, n_trees))
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.decision_function(x), axis=1)

    def params_dict(self) -> dict:
        return {"base_score": self.base_score.tolist(), "learning_rate": self.learning_rate,
                "trees": [[t.to_dict() for t in ts] for ts in self.trees]}

    @classmethod
    def from_params(cls, n_classes, input_dim, p):
        return cls(n_classes=n_classes, input_dim=input_dim,
                   base_score=np.array(p["base_score"], dtype=np.float64),
                   learning_rate=float(p["learning_rate"]),
                   trees=[[Tree.from_dict(t) for t in ts] for ts in p["trees"]])


def train_gbt(train: LabeledSet, params: GbtParams | None = None) -> GbtModel:
    params = params or GbtParams()
    x, y = train.vectors, train.labels
    present = np.unique(y)
    if len(present) < 2:
        raise ValueError("training set contains a single class")
    rng = np.random.default_rng(params.seed)
    binned = _Binned(x, params.max_bins)
    n = len(y)
    n_sub = max(1, int(round(params.subsample * n)))

    base = np.empty(train.n_classes)
    trees = []
    for c in range(train.n_classes):
        target = (y == c).astype(np.float64)
        prior = np.clip(target.mean(), 1e-6, 1 - 1e-6)
        base[c] = np.log(prior / (1.0 - prior))
        score = np.full(n, base[c])
        class_trees = []
        for _ in range(params.n_trees):
            p = _sigmoid(score)
            resid = target - p
            hess = p * (1.0 - p)
            rows = (np.sort(rng.choice(n, n_sub, replace=False)) if n_sub < n
                    else np.arange(n))
            tree = _grow_tree(binned, rows, resid, hess, params.max_depth,
                              params.min_samples_leaf, params.reg_lambda)
            score += params.learning_rate * tree.predict(x)
            class_trees.append(tree)
        trees.append(class_trees)
    return GbtModel(n_classes=train.n_classes, input_dim=train.dim, base_score=base,
                    learning_rate=params.learning_rate, trees=trees)
