"""Column-and-constraint generation for two-stage robust problems."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from ..core import SolveStatus, TwoStageInstance
from ..milp import solve_milp
from ..netmodels import adversarial, encode_master, solve_deterministic
from .routes import MAX_ROUTES, RouteTable, route_count

CONVERGENCE_TOL = 1e-6
# MILP backends plus the route-union search and the automatic choice between them
MASTER_BACKENDS = ("native", "highs", "routes", "auto")

_tables: dict[int, tuple[TwoStageInstance, RouteTable]] = {}


@dataclass(frozen=True)
class IterationRecord:
    lower: float  # running lower bound after this iteration
    upper: float  # c x* + adversarial value for this iteration's x*
    added: Optional[int]  # scenario appended to the master, None when none was
    seconds: float  # wall time since the run started
    master_status: str = SolveStatus.OPTIMAL.value


@dataclass
class CCGResult:
    iterations: list[IterationRecord]
    final_x: Optional[np.ndarray]
    final_value: float
    converged: bool
    start_set: list[int]
    scenario_set: list[int] = field(default_factory=list)
    status: SolveStatus = SolveStatus.OPTIMAL

    @property
    def lower_bound(self) -> float:
        return self.iterations[-1].lower if self.iterations else -math.inf

    @property
    def upper_bound(self) -> float:
        return min((it.upper for it in self.iterations), default=math.inf)

    @property
    def generated(self) -> list[int]:
        """Scenarios added after the start set, in generation order."""
        return [it.added for it in self.iterations if it.added is not None]

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "converged": bool(self.converged),
            "final_value": _num(self.final_value),
            "final_x": None if self.final_x is None else [int(v) for v in self.final_x],
            "start_set": list(self.start_set),
            "scenario_set": list(self.scenario_set),
            "iterations": [
                {
                    "lower": _num(it.lower),
                    "upper": _num(it.upper),
                    "added": it.added,
                    "seconds": it.seconds,
                    "master_status": it.master_status,
                }
                for it in self.iterations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "CCGResult":
        iters = [
            IterationRecord(float(r["lower"]), float(r["upper"]), r["added"], r["seconds"], r["master_status"])
            for r in doc["iterations"]
        ]
        x = doc.get("final_x")
        return cls(
            iters,
            None if x is None else np.array(x, dtype=np.int8),
            float(doc["final_value"]),
            bool(doc["converged"]),
            list(doc["start_set"]),
            list(doc.get("scenario_set", [])),
            SolveStatus(doc.get("status", "Optimal")),
        )


def _num(v: float):
    return v if math.isfinite(v) else repr(float(v))


@dataclass(frozen=True)
class MasterResult:
    status: SolveStatus
    value: float  # objective of the best known solution (nan if none)
    lower_bound: float
    x: Optional[np.ndarray]


def solve_master(
    instance: TwoStageInstance,
    index_set: Sequence[int],
    deadline: Optional[float] = None,
    backend: Optional[str] = None,
) -> MasterResult:
    """Master problem over ``index_set``; a single scenario is solved combinatorially.

    An empty set gives the first-stage-only problem whose value is ``sum(min(c, 0))``.
    ``backend`` is a MILP backend, ``"routes"`` for the route-union search, or
    ``"auto"`` to use the search whenever the instance has at most
    ``MAX_ROUTES`` routes and the default MILP backend otherwise.
    """
    index_set = [int(i) for i in index_set]
    c = instance.first_stage_costs
    if not index_set:
        value = float(np.minimum(c, 0.0).sum())
        return MasterResult(SolveStatus.OPTIMAL, value, value, (c < 0).astype(np.int8))
    if len(index_set) == 1:
        det = solve_deterministic(instance, instance.scenarios[index_set[0]])
        if not math.isfinite(det.value):
            return MasterResult(SolveStatus.INFEASIBLE, math.inf, math.inf, None)
        return MasterResult(SolveStatus.OPTIMAL, det.value, det.value, det.x)
    if backend == "auto":
        backend = "routes" if route_count(instance) <= MAX_ROUTES else None
    if backend == "routes":
        status, value, bound, x = _route_table(instance).solve(index_set, deadline)
        return MasterResult(status, value, bound, x)
    mm = encode_master(instance, index_set)
    sol = solve_milp(mm.model, deadline=deadline, backend=backend)
    if sol.status is SolveStatus.INFEASIBLE:
        return MasterResult(SolveStatus.INFEASIBLE, math.inf, math.inf, None)
    if sol.status not in (SolveStatus.OPTIMAL, SolveStatus.TIME_LIMIT):
        raise RuntimeError(f"master solve failed with status {sol.status.value}")
    x = mm.x_vector(sol.values, instance.graph.arcs) if sol.has_values else None
    return MasterResult(sol.status, sol.objective, sol.lower_bound, x)


def _route_table(instance: TwoStageInstance) -> RouteTable:
    hit = _tables.get(id(instance))
    if hit is not None and hit[0] is instance:
        return hit[1]
    if len(_tables) >= 16:
        _tables.clear()
    table = RouteTable(instance)
    _tables[id(instance)] = (instance, table)
    return table


def master_value(
    instance: TwoStageInstance,
    index_set: Sequence[int],
    deadline: Optional[float] = None,
    backend: Optional[str] = None,
) -> float:
    """Lower bound from the master over ``index_set`` (exact value when solved to optimality)."""
    return solve_master(instance, index_set, deadline, backend).lower_bound


def ccg(
    instance: TwoStageInstance,
    start: Sequence[int],
    deadline: Optional[float] = None,
    backend: Optional[str] = None,
    tol: float = CONVERGENCE_TOL,
) -> CCGResult:
    """Column-and-constraint generation from the scenarios in ``start``.

    Each iteration solves the master over the current scenario set, evaluates
    the adversarial scenario for its first stage, and appends it while it
    exceeds the master's epigraph value by more than ``tol``. ``deadline`` is
    a wall-clock budget in seconds for the whole run; a master cut short by it
    contributes its best bound as the lower bound.
    """
    start = [int(i) for i in start]
    if not start:
        raise ValueError("start set must not be empty")
    if len(set(start)) != len(start):
        raise ValueError("start set contains duplicates")
    if min(start) < 0 or max(start) >= instance.m:
        raise ValueError(f"scenario index out of range [0, {instance.m})")

    t0 = time.monotonic()
    c = instance.first_stage_costs
    index_set = list(start)
    records: list[IterationRecord] = []
    lower = -math.inf
    best_upper = math.inf
    best_x: Optional[np.ndarray] = None
    converged = False

    while True:
        remaining = None
        if deadline is not None:
            remaining = deadline - (time.monotonic() - t0)
            if remaining <= 0 and records:
                break
            remaining = max(remaining, 0.0)
        res = solve_master(instance, index_set, remaining, backend)
        if res.status is SolveStatus.INFEASIBLE:
            return CCGResult(records, None, math.inf, False, start, index_set, SolveStatus.INFEASIBLE)
        lower = max(lower, res.lower_bound)
        if res.x is None:
            # cut short before any first stage was found
            records.append(IterationRecord(lower, math.inf, None, time.monotonic() - t0, res.status.value))
            break
        cx = float(c @ res.x)
        idx, val = adversarial(instance, res.x)
        upper = cx + val
        if upper < best_upper:
            best_upper, best_x = upper, res.x
        mu = res.value - cx
        optimal = res.status is SolveStatus.OPTIMAL
        if val <= mu + tol or idx in index_set:
            # tolerance ties can make the adversary return a scenario already present
            converged = optimal and upper - lower <= tol
            records.append(IterationRecord(lower, upper, None, time.monotonic() - t0, res.status.value))
            break
        index_set.append(idx)
        records.append(IterationRecord(lower, upper, idx, time.monotonic() - t0, res.status.value))
        if not optimal:
            break

    status = SolveStatus.OPTIMAL if converged else SolveStatus.TIME_LIMIT
    final_value = best_upper
    if converged:
        final_value = records[-1].upper
    return CCGResult(records, best_x, final_value, converged, start, index_set, status)
