"""CART classification tree (binary labels, Gini impurity) stored as flat arrays."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray  # int, LEAF for leaves
    threshold: np.ndarray  # go left when x[feature] <= threshold
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # class-1 fraction of the node's (bootstrap) samples
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] != LEAF:
                stack.append((int(self.left[node]), d + 1))
                stack.append((int(self.right[node]), d + 1))
        return best

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f != LEAF
            if not inner.any():
                return node
            r = rows[inner]
            n = node[inner]
            go_left = X[r, f[inner]] <= self.threshold[n]
            node[inner] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Tree":
        return cls(
            np.array(doc["feature"], dtype=np.int64),
            np.array(doc["threshold"], dtype=np.float64),
            np.array(doc["left"], dtype=np.int64),
            np.array(doc["right"], dtype=np.int64),
            np.array(doc["value"], dtype=np.float64),
            np.array(doc["n_samples"], dtype=np.int64),
        )


def _gini(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    p = pos / n
    return 2.0 * p * (1.0 - p)


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Lowest weighted child impurity split of one feature: ``(score, threshold)`` or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    left_n = np.arange(1, n)
    left_pos = np.cumsum(ys)[:-1]
    total_pos = ys.sum()
    valid = (xs[1:] > xs[:-1]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
    if not valid.any():
        return None
    right_n = n - left_n
    score = left_n * _gini(left_pos, left_n) + right_n * _gini(total_pos - left_pos, right_n)
    score = np.where(valid, score, np.inf)
    k = int(np.argmin(score))
    thr = 0.5 * (xs[k] + xs[k + 1])
    if thr >= xs[k + 1]:
        # neighbours one ulp apart: the midpoint rounds up onto the right value
        thr = xs[k]
    return float(score[k]), float(thr)


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    max_depth: int,
    min_leaf: int,
    max_features: int,
) -> tuple[Tree, np.ndarray]:
    """Grow one tree; returns it with its unnormalized impurity decrease per feature."""
    N, p = X.shape
    feature, threshold, left, right, value, count = [], [], [], [], [], []
    importance = np.zeros(p)

    def new_node(idx: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        count.append(len(idx))
        return len(feature) - 1

    root = new_node(np.arange(N))
    stack = [(root, np.arange(N), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = len(idx)
        pos = float(y[idx].sum())
        impurity = 2.0 * (pos / n) * (1.0 - pos / n)
        if depth >= max_depth or impurity <= 1e-12 or n < 2 * min_leaf:
            continue
        Xn, yn = X[idx], y[idx]
        best = None
        visited = 0
        # keep drawing features until enough non-constant ones were examined
        for f in rng.permutation(p):
            col = Xn[:, f]
            if col.max() <= col.min():
                continue
            visited += 1
            cand = _best_split(col, yn, min_leaf)
            if cand is not None and (best is None or cand[0] < best[0]):
                best = (cand[0], cand[1], int(f))
            if visited >= max_features:
                break
        if best is None:
            continue
        score, thr, f = best
        importance[f] += (n * impurity - score) / N
        go_left = Xn[:, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    tree = Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        np.array(count, dtype=np.int64),
    )
    return tree, importance
