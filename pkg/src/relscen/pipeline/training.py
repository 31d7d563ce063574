"""Turning labeled instances into training rows and a trained model."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ..core import TwoStageInstance
from ..features import instance_features
from ..forest import ForestModel, ForestParams, train_forest


def training_rows(instances: Iterable[TwoStageInstance]) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-instance normalized feature rows and their labels."""
    X, y = [], []
    for inst in instances:
        if inst.labels is None:
            raise ValueError(f"instance {inst.id!r} carries no labels")
        X.append(instance_features(inst))
        y.append(np.asarray(inst.labels, dtype=np.int8))
    if not X:
        raise ValueError("no training instances")
    return np.vstack(X), np.concatenate(y)


def train_on_instances(instances: Iterable[TwoStageInstance], params: ForestParams = ForestParams()) -> ForestModel:
    X, y = training_rows(instances)
    return train_forest(X, y, params)
