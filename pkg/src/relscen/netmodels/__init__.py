"""Two-stage TSP / shortest-path models and their second-stage oracles.

Scenario indices are 0-based throughout. An infeasible second stage is
reported as ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import ProblemKind, SolveStatus, TwoStageInstance
from ..milp import solve_milp
from .encoding import (
    MasterModel,
    encode_deterministic,
    encode_first_stage_only,
    encode_master,
    encode_second_stage,
    recourse_vector,
)
from .oracles import (
    HELD_KARP_MAX_NODES,
    dag_shortest_paths,
    enumerate_paths,
    enumerate_tours,
    held_karp,
    held_karp_batch,
    label_correcting,
    route_matrix,
)

INFEASIBLE = math.inf


def _as_mask(instance: TwoStageInstance, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (instance.q,):
        raise ValueError(f"x must have one entry per arc ({instance.q}), got shape {x.shape}")
    return x.astype(bool)


def _route(instance: TwoStageInstance, weights: np.ndarray, available: np.ndarray):
    """Cheapest route (path or tour) under ``weights`` on ``available`` arcs."""
    g = instance.graph
    if instance.problem_kind is ProblemKind.SP:
        return label_correcting(g, weights, available)
    if g.node_count <= HELD_KARP_MAX_NODES:
        return held_karp(g, weights, available)
    mm = encode_second_stage(instance, available, weights)
    sol = solve_milp(mm.model)
    if sol.status is SolveStatus.INFEASIBLE:
        return math.inf, []
    if sol.status is not SolveStatus.OPTIMAL:
        raise RuntimeError(f"second-stage MILP ended with status {sol.status.value}")
    y = recourse_vector(mm, sol, g)
    return sol.objective, [int(e) for e in np.flatnonzero(y > 0.5)]


def second_stage_value(instance: TwoStageInstance, x, scenario_index: int) -> float:
    """Optimal recourse cost of first stage ``x`` under one scenario."""
    mask = _as_mask(instance, x)
    cost, _ = _route(instance, instance.scenarios[scenario_index], mask)
    return float(cost)


def second_stage_values(instance: TwoStageInstance, x, indices: Optional[Sequence[int]] = None) -> np.ndarray:
    """Recourse cost of ``x`` for each scenario in ``indices`` (all by default)."""
    mask = _as_mask(instance, x)
    D = instance.scenarios if indices is None else instance.scenarios[list(indices)]
    g = instance.graph
    if instance.problem_kind is ProblemKind.SP:
        return dag_shortest_paths(g, D, mask)
    if g.node_count <= HELD_KARP_MAX_NODES:
        return held_karp_batch(g, D, mask)
    return np.array([_route(instance, d, mask)[0] for d in D])


def adversarial(instance: TwoStageInstance, x) -> tuple[int, float]:
    """Worst scenario for ``x``: ``(index, value)``, lowest index on ties."""
    vals = second_stage_values(instance, x)
    if not np.all(np.isfinite(vals)):
        return 0, INFEASIBLE
    i = int(np.argmax(vals))
    return i, float(vals[i])


@dataclass(frozen=True)
class DeterministicSolution:
    value: float
    x: np.ndarray
    y: np.ndarray


def solve_deterministic(
    instance: TwoStageInstance, costs: np.ndarray, forbidden: Sequence[int] = ()
) -> DeterministicSolution:
    """Solve ``min c x + d y`` combinatorially.

    Given a route ``y`` it is optimal to buy exactly the arcs of ``y`` plus every
    arc with negative first-stage cost, so the problem is one route search under
    ``max(c, 0) + d``. Arcs in ``forbidden`` may not carry recourse.
    """
    c = instance.first_stage_costs
    d = np.asarray(costs, dtype=np.float64)
    available = np.ones(instance.q, dtype=bool)
    available[list(forbidden)] = False
    cost, arcs = _route(instance, np.maximum(c, 0.0) + d, available)
    y = np.zeros(instance.q, dtype=np.int8)
    x = (c < 0).astype(np.int8)
    if not math.isfinite(cost):
        return DeterministicSolution(math.inf, x, y)
    y[arcs] = 1
    x[arcs] = 1
    return DeterministicSolution(float(c[c < 0].sum() + cost), x, y)


def routes(instance: TwoStageInstance) -> list[list[int]]:
    """Every feasible recourse route (s-t paths or tours)."""
    if instance.problem_kind is ProblemKind.SP:
        return enumerate_paths(instance.graph)
    return enumerate_tours(instance.graph)


__all__ = [
    "INFEASIBLE",
    "DeterministicSolution",
    "MasterModel",
    "adversarial",
    "dag_shortest_paths",
    "encode_deterministic",
    "encode_first_stage_only",
    "encode_master",
    "encode_second_stage",
    "enumerate_paths",
    "enumerate_tours",
    "held_karp",
    "held_karp_batch",
    "label_correcting",
    "recourse_vector",
    "route_matrix",
    "routes",
    "second_stage_value",
    "second_stage_values",
    "solve_deterministic",
]
