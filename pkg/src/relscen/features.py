"""Dimension-independent per-scenario features.

Every scenario of an instance is described by 26 numbers in three groups:
properties of the cost vector alone, its position within the scenario set,
and how it interacts with deterministic optima of the routing problem.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .core import TwoStageInstance
from .netmodels import solve_deterministic

KAPPAS = (1, 2, 3, 4, 5)
ALPHAS = (1, 2, 3, 4, 5)
BIG_M_FACTOR = 10.0

FEATURE_NAMES: tuple[str, ...] = (
    ("f1_1", "f1_2", "f1_3", "f2_1", "f2_2")
    + tuple(f"f2_3_k{k}" for k in KAPPAS)
    + ("f2_4", "f3_1", "f3_2", "f3_3", "f3_4")
    + tuple(f"f3_5_k{k}" for k in KAPPAS)
    + ("f3_6",)
    + tuple(f"f3_7_a{a}" for a in ALPHAS)
)
FEATURE_COUNT = len(FEATURE_NAMES)


class FeatureError(ValueError):
    """The instance cannot be featurized (e.g. no route under the average scenario)."""


@dataclass(frozen=True)
class FeatureContext:
    center: np.ndarray  # mean scenario
    opt: np.ndarray  # (m,) deterministic optimum per scenario
    recourse: np.ndarray  # (m, q) optimal route per scenario
    center_recourse: np.ndarray  # (q,) optimal route for the mean scenario
    zero_first_stage: np.ndarray  # (q,) optimal first stage when recourse is free
    removal_opt: np.ndarray  # (q,) mean-scenario optimum with each arc's recourse removed
    ranking: tuple[int, ...]  # arcs by removal_opt descending, ties by index
    big_m: float


def build_context(instance: TwoStageInstance) -> FeatureContext:
    """Run all deterministic solves the structural features need."""
    m, q = instance.m, instance.q
    D = instance.scenarios
    center = D.mean(axis=0)
    opt = np.empty(m)
    Y = np.zeros((m, q))
    for i in range(m):
        sol = solve_deterministic(instance, D[i])
        if not math.isfinite(sol.value):
            raise FeatureError(f"scenario {i} admits no route")
        opt[i] = sol.value
        Y[i] = sol.y
    base = solve_deterministic(instance, center)
    if not math.isfinite(base.value):
        raise FeatureError("no route under the average scenario")
    x_star = solve_deterministic(instance, np.zeros(q)).x.astype(np.float64)

    removal = np.empty(q)
    for t in range(q):
        removal[t] = solve_deterministic(instance, center, forbidden=[t]).value
    feasible = np.isfinite(removal)
    ref = removal[feasible].max() if feasible.any() else base.value
    big_m = BIG_M_FACTOR * abs(ref) if ref != 0 else BIG_M_FACTOR
    removal[~feasible] = big_m
    ranking = tuple(int(t) for t in np.lexsort((np.arange(q), -removal)))
    return FeatureContext(center, opt, Y, base.y.astype(np.float64), x_star, removal, ranking, float(big_m))


def delta_matrix(instance: TwoStageInstance, context: FeatureContext) -> np.ndarray:
    """Pairwise structural distances between scenarios (symmetric, zero diagonal)."""
    D = instance.scenarios
    M = D @ context.recourse.T  # M[i, j] = d^i . y^j
    own = np.diag(M)
    out = 0.5 * (own[:, None] - M) + 0.5 * (own[None, :] - M.T)
    np.fill_diagonal(out, 0.0)
    return out


def delta(instance: TwoStageInstance, i: int, j: int, context: FeatureContext) -> float:
    """How much worse each scenario's optimal route does under the other scenario, averaged."""
    di, dj = instance.scenarios[i], instance.scenarios[j]
    yi, yj = context.recourse[i], context.recourse[j]
    return 0.5 * (di @ yi - di @ yj) + 0.5 * (dj @ yj - dj @ yi)


def _neighbour_means(dist: np.ndarray, kappas: Sequence[int]) -> np.ndarray:
    """Mean of the ``kappa`` smallest off-diagonal entries per row, per kappa.

    With fewer than ``kappa`` other scenarios all of them are used; a lone
    scenario gets 0.
    """
    m = dist.shape[0]
    out = np.zeros((m, len(kappas)))
    if m == 1:
        return out
    masked = dist.astype(np.float64).copy()
    np.fill_diagonal(masked, np.inf)
    srt = np.sort(masked, axis=1)[:, : m - 1]
    csum = np.cumsum(srt, axis=1)
    for c, kappa in enumerate(kappas):
        kk = min(kappa, m - 1)
        out[:, c] = csum[:, kk - 1] / kk
    return out


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray  # (m, 26)
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def normalized(self) -> "FeatureMatrix":
        return FeatureMatrix(minmax_normalize(self.values), self.feature_names)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def to_csv(self, labels: Optional[Sequence[int]] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.feature_names) + ["label"])
        for i, row in enumerate(self.values):
            lab = "" if labels is None else int(labels[i])
            w.writerow([repr(float(v)) for v in row] + [lab])
        return buf.getvalue()


def compute_features(instance: TwoStageInstance, context: Optional[FeatureContext] = None) -> FeatureMatrix:
    """Raw (unnormalized) features, one row per scenario."""
    if context is None:
        context = build_context(instance)
    D = instance.scenarios
    m, q = D.shape
    center = context.center
    absD = np.abs(D)

    f11 = absD.mean(axis=1)
    f12 = D.var(axis=1)
    f13 = absD.max(axis=1)
    f21 = np.linalg.norm(D - center, axis=1)
    f22 = f21**2
    f23 = _neighbour_means(cdist(D, D), KAPPAS)
    f24 = D @ center

    f31 = context.opt
    f32 = context.recourse @ center
    own = np.einsum("ij,ij->i", D, context.recourse)
    ybar = context.center_recourse
    f33 = 0.5 * (own - D @ ybar) + 0.5 * (center @ ybar - context.recourse @ center)
    f34 = f33**2
    f35 = _neighbour_means(delta_matrix(instance, context), KAPPAS)
    f36 = D @ context.zero_first_stage
    f37 = np.zeros((m, len(ALPHAS)))
    for c, a in enumerate(ALPHAS):
        if a <= q:
            f37[:, c] = absD[:, context.ranking[a - 1]]

    values = np.column_stack(
        [f11, f12, f13, f21, f22, f23, f24, f31, f32, f33, f34, f35, f36, f37]
    )
    assert values.shape == (m, FEATURE_COUNT)
    return FeatureMatrix(values)


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Per-column min-max scaling to [0, 1]; constant columns become 0."""
    V = np.asarray(values, dtype=np.float64)
    lo = V.min(axis=0)
    span = V.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (V - lo) / safe, 0.0)
    return np.clip(out, 0.0, 1.0)


def instance_features(instance: TwoStageInstance, normalize: bool = True) -> np.ndarray:
    """Feature rows for every scenario of ``instance`` (normalized by default)."""
    fm = compute_features(instance)
    return fm.normalized().values if normalize else fm.values
