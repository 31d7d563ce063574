"""Random-forest classifier for scenario relevance, with ROC evaluation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from ..features import FEATURE_COUNT, FEATURE_NAMES
from .roc import roc_auc, roc_curve, roc_csv
from .tree import Tree, fit_tree


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 5
    min_leaf: int = 1
    max_features: Optional[int] = None  # default: ceil(sqrt(feature count))
    seed: int = 0
    bootstrap: bool = True

    def features_per_split(self, p: int) -> int:
        return self.max_features if self.max_features is not None else math.ceil(math.sqrt(p))


@dataclass
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    feature_names: tuple[str, ...]
    importances: np.ndarray  # per-tree normalized impurity decrease, averaged

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Mean leaf class-1 fraction over trees, per row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "params": asdict(self.params),
            "feature_names": list(self.feature_names),
            "importances": [float(v) for v in self.importances],
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ForestModel":
        return cls(
            [Tree.from_dict(t) for t in doc["trees"]],
            ForestParams(**doc["params"]),
            tuple(doc["feature_names"]),
            np.array(doc["importances"], dtype=np.float64),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "ForestModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_forest(
    samples: np.ndarray,
    labels: Sequence[int],
    params: ForestParams = ForestParams(),
    feature_names: Optional[Sequence[str]] = None,
) -> ForestModel:
    """Fit ``params.n_trees`` trees, each on a bootstrap resample of the rows."""
    X = np.asarray(samples, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError("samples must be N x p with one label per row")
    if X.shape[0] < 2:
        raise TrainingError("need at least two samples")
    if not np.all(np.isfinite(X)):
        raise TrainingError("samples contain non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise TrainingError("labels must be 0 or 1")
    if y.min() == y.max():
        raise TrainingError("labels contain a single class")
    N, p = X.shape
    if feature_names is None:
        feature_names = FEATURE_NAMES if p == FEATURE_COUNT else tuple(f"x{j}" for j in range(p))
    k = params.features_per_split(p)
    trees, imps = [], []
    for seq in np.random.SeedSequence(params.seed).spawn(params.n_trees):
        rng = np.random.default_rng(seq)
        boot = rng.integers(0, N, size=N) if params.bootstrap else np.arange(N)
        tree, imp = fit_tree(X[boot], y[boot], rng, params.max_depth, params.min_leaf, k)
        trees.append(tree)
        total = imp.sum()
        imps.append(imp / total if total > 0 else imp)
    mean_imp = np.mean(imps, axis=0)
    if mean_imp.sum() > 0:
        mean_imp = mean_imp / mean_imp.sum()
    return ForestModel(trees, params, tuple(feature_names), mean_imp)


def predict_proba(model: ForestModel, rows: np.ndarray) -> np.ndarray:
    return model.predict_proba(rows)


def feature_importance(model: ForestModel) -> np.ndarray:
    """Mean Gini decrease per feature, normalized to sum to one (all zero if no tree split)."""
    return model.importances.copy()


__all__ = [
    "ForestModel",
    "ForestParams",
    "TrainingError",
    "Tree",
    "feature_importance",
    "predict_proba",
    "roc_auc",
    "roc_csv",
    "roc_curve",
    "train_forest",
]
