"""Choosing k starting scenarios: data-driven, uniform, and cost-sum weighted."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import TwoStageInstance
from ..features import instance_features


class Method(str, enum.Enum):
    DDH = "DDH"
    RANDOM = "Random"
    MAXSUM = "Maxsum"

    @classmethod
    def parse(cls, text: str) -> "Method":
        for m in cls:
            if m.value.lower() == text.lower():
                return m
        raise ValueError(f"unknown selection method {text!r}")


@dataclass(frozen=True)
class SelectionDistribution:
    """Sampling distribution proportional to squared weights."""

    weights: np.ndarray

    @property
    def uniform_fallback(self) -> bool:
        return not np.any(self.weights**2 > 0)

    @property
    def probabilities(self) -> np.ndarray:
        sq = np.asarray(self.weights, dtype=np.float64) ** 2
        total = sq.sum()
        if total <= 0:
            return np.full(len(sq), 1.0 / len(sq))
        return sq / total


def sample_without_replacement(probabilities: np.ndarray, k: int, rng: np.random.Generator) -> tuple[list[int], bool]:
    """Draw ``k`` distinct indices one at a time, renormalizing after each draw.

    Returns the indices and whether a uniform fallback was needed because the
    remaining mass ran out.
    """
    p = np.array(probabilities, dtype=np.float64)
    if not 0 <= k <= len(p):
        raise ValueError(f"cannot draw {k} of {len(p)} scenarios")
    chosen: list[int] = []
    fallback = False
    for _ in range(k):
        mass = p.sum()
        if mass <= 0:
            fallback = True
            p = np.ones(len(p))
            p[chosen] = 0.0
            mass = p.sum()
        i = int(rng.choice(len(p), p=p / mass))
        chosen.append(i)
        p[i] = 0.0
    return chosen, fallback


@dataclass
class Selection:
    indices: list[int]
    method: Method
    distribution: Optional[SelectionDistribution]
    uniform_fallback: bool
    seconds: float


def selection_weights(method: Method, instance: TwoStageInstance, model=None) -> Optional[np.ndarray]:
    """Raw per-scenario weights (``None`` for uniform sampling)."""
    if method is Method.RANDOM:
        return None
    if method is Method.MAXSUM:
        return instance.scenarios.sum(axis=1)
    if model is None:
        raise ValueError("DDH selection needs a trained model")
    return model.predict_proba(instance_features(instance))


def select_scenarios(
    method,
    instance: TwoStageInstance,
    k: int,
    model=None,
    rng: Optional[np.random.Generator] = None,
) -> Selection:
    """Pick ``k`` distinct scenario indices with the given method."""
    method = method if isinstance(method, Method) else Method.parse(method)
    if not 1 <= k <= instance.m:
        raise ValueError(f"k must lie in [1, {instance.m}], got {k}")
    rng = rng if rng is not None else np.random.default_rng()
    t0 = time.monotonic()
    w = selection_weights(method, instance, model)
    if w is None:
        idx = [int(i) for i in rng.choice(instance.m, size=k, replace=False)]
        return Selection(idx, method, None, False, time.monotonic() - t0)
    dist = SelectionDistribution(np.asarray(w, dtype=np.float64))
    idx, fallback = sample_without_replacement(dist.probabilities, k, rng)
    return Selection(idx, method, dist, fallback or dist.uniform_fallback, time.monotonic() - t0)
