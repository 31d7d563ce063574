"""MILP encodings of the two-stage TSP (MTZ) and layered shortest path problems."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..core import Graph, ProblemKind, Solution, TwoStageInstance
from ..milp import LinearModel, Relation, Sense


@dataclass
class MasterModel:
    model: LinearModel
    x_indices: dict[tuple[int, int], int]
    y_indices: dict[tuple[int, tuple[int, int]], int]  # (slot, arc) -> var
    mu_index: Optional[int]
    slots: list[int] = field(default_factory=list)  # scenario index per slot
    order_indices: dict[tuple[int, int], int] = field(default_factory=dict)  # MTZ (slot, node)

    def x_vector(self, values: np.ndarray, arcs: Sequence[tuple[int, int]]) -> np.ndarray:
        """Binary first-stage vector in canonical arc order."""
        return np.array([round(values[self.x_indices[a]]) for a in arcs], dtype=np.int8)


def _add_first_stage(model: LinearModel, instance: TwoStageInstance) -> dict[tuple[int, int], int]:
    c = instance.first_stage_costs
    return {
        (t, h): model.add_binary(f"x[{t},{h}]", obj=float(c[e]))
        for e, (t, h) in enumerate(instance.graph.arcs)
    }


def _add_recourse_block(
    model: LinearModel,
    instance: TwoStageInstance,
    x_idx: Optional[dict[tuple[int, int], int]],
    slot: int,
    y_costs: Optional[np.ndarray] = None,
    forbidden: Sequence[int] = (),
):
    """Add one second-stage block ``y`` with feasibility and linking rows.

    ``y_costs`` (if given) go straight into the objective. Returns the arc to
    variable map and, for TSP, the MTZ order variables.
    """
    g = instance.graph
    tag = f"{slot}"
    tsp = instance.problem_kind is ProblemKind.TSP
    y: dict[tuple[int, int], int] = {}
    for e, (t, h) in enumerate(g.arcs):
        obj = 0.0 if y_costs is None else float(y_costs[e])
        ub = 0.0 if e in forbidden else 1.0
        # flow polytopes are integral once x is fixed, so SP recourse stays continuous
        y[(t, h)] = model.add_var(f"y{tag}[{t},{h}]", 0.0, ub, integer=tsp, obj=obj)
    if x_idx is not None:
        for a, j in y.items():
            model.add_constraint({j: 1.0, x_idx[a]: -1.0}, Relation.LE, 0.0, f"link{tag}[{a[0]},{a[1]}]")

    order: dict[int, int] = {}
    if tsp:
        n = g.node_count
        for v in range(n):
            model.add_constraint({y[a]: 1.0 for a in g.arcs if a[0] == v}, Relation.EQ, 1.0, f"out{tag}[{v}]")
            model.add_constraint({y[a]: 1.0 for a in g.arcs if a[1] == v}, Relation.EQ, 1.0, f"in{tag}[{v}]")
        for v in range(1, n):
            order[v] = model.add_var(f"u{tag}[{v}]", 1.0, float(n - 1))
        for (a, b), j in y.items():
            if a != 0 and b != 0:
                model.add_constraint(
                    {order[a]: 1.0, order[b]: -1.0, j: float(n - 1)}, Relation.LE, float(n - 2), f"mtz{tag}[{a},{b}]"
                )
    else:
        for v in range(g.node_count):
            if v == g.sink:
                continue  # implied by the other balance rows
            coeffs: dict[int, float] = {}
            for a, j in y.items():
                if a[0] == v:
                    coeffs[j] = coeffs.get(j, 0.0) + 1.0
                elif a[1] == v:
                    coeffs[j] = coeffs.get(j, 0.0) - 1.0
            model.add_constraint(coeffs, Relation.EQ, 1.0 if v == g.source else 0.0, f"flow{tag}[{v}]")
    return y, order


def encode_master(instance: TwoStageInstance, index_set: Sequence[int]) -> MasterModel:
    """Robust two-stage model restricted to the scenarios in ``index_set`` (0-based)."""
    index_set = [int(i) for i in index_set]
    if not index_set:
        raise ValueError("index_set must not be empty")
    if len(set(index_set)) != len(index_set):
        raise ValueError("index_set contains duplicates")
    if min(index_set) < 0 or max(index_set) >= instance.m:
        raise ValueError(f"scenario index out of range [0, {instance.m})")
    model = LinearModel(Sense.MINIMIZE)
    x_idx = _add_first_stage(model, instance)
    mu = model.add_var("mu", -math.inf, math.inf, obj=1.0)
    y_all: dict[tuple[int, tuple[int, int]], int] = {}
    order_all: dict[tuple[int, int], int] = {}
    for slot, i in enumerate(index_set):
        y, order = _add_recourse_block(model, instance, x_idx, slot)
        d = instance.scenarios[i]
        coeffs = {y[a]: float(d[e]) for e, a in enumerate(instance.graph.arcs)}
        coeffs[mu] = -1.0
        model.add_constraint(coeffs, Relation.LE, 0.0, f"epi{slot}")
        y_all.update({(slot, a): j for a, j in y.items()})
        order_all.update({(slot, v): j for v, j in order.items()})
    return MasterModel(model, x_idx, y_all, mu, list(index_set), order_all)


def encode_first_stage_only(instance: TwoStageInstance) -> MasterModel:
    """Master with no scenario: buy nothing unless it pays (value ``sum(min(c, 0))``)."""
    model = LinearModel(Sense.MINIMIZE)
    x_idx = _add_first_stage(model, instance)
    return MasterModel(model, x_idx, {}, None, [])


def encode_deterministic(
    instance: TwoStageInstance,
    scenario_index: Optional[int] = None,
    costs: Optional[np.ndarray] = None,
    forbidden: Sequence[int] = (),
) -> MasterModel:
    """Single-scenario two-stage model ``min c x + d y``.

    Either a scenario index or an explicit second-stage cost vector is used;
    ``forbidden`` arcs have their recourse variable fixed to zero.
    """
    if costs is None:
        if scenario_index is None or not 0 <= scenario_index < instance.m:
            raise ValueError("scenario_index out of range")
        costs = instance.scenarios[scenario_index]
    model = LinearModel(Sense.MINIMIZE)
    x_idx = _add_first_stage(model, instance)
    y, order = _add_recourse_block(model, instance, x_idx, 0, y_costs=np.asarray(costs), forbidden=forbidden)
    slots = [] if scenario_index is None else [scenario_index]
    return MasterModel(
        model, x_idx, {(0, a): j for a, j in y.items()}, None, slots, {(0, v): j for v, j in order.items()}
    )


def encode_second_stage(instance: TwoStageInstance, x: np.ndarray, costs: np.ndarray) -> MasterModel:
    """Recourse-only model for a fixed first stage (arcs with ``x=0`` forbidden)."""
    model = LinearModel(Sense.MINIMIZE)
    closed = [e for e in range(instance.q) if not x[e]]
    y, order = _add_recourse_block(model, instance, None, 0, y_costs=np.asarray(costs), forbidden=closed)
    return MasterModel(model, {}, {(0, a): j for a, j in y.items()}, None, [], {(0, v): j for v, j in order.items()})


def recourse_vector(master: MasterModel, sol: Solution, graph: Graph, slot: int = 0) -> np.ndarray:
    return np.array([sol.values[master.y_indices[(slot, a)]] for a in graph.arcs])
