"""Single-stage min-max problems over a binary feasible set and their scenario generation."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import SolveStatus
from ..milp import LinearModel, Relation, Sense, solve_milp
from .ccg import CONVERGENCE_TOL, CCGResult, IterationRecord, MasterResult

MAX_FEASIBLE_POINTS = 4096
MAX_ENUMERATED_VARS = 22
_CHUNK = 1 << 14


class CapacityError(ValueError):
    """An exact method would have to enumerate more than its cap allows."""


@dataclass(frozen=True, eq=False)
class SingleStageInstance:
    """``min_{x in X} max_i (c^i)^T x`` with ``X`` given as a binary feasibility system."""

    feasible_set: LinearModel
    scenarios: np.ndarray

    def __post_init__(self) -> None:
        S = np.array(self.scenarios, dtype=np.float64)
        if S.ndim != 2 or S.shape[0] < 1:
            raise ValueError("scenarios must be a non-empty m x n matrix")
        if S.shape[1] != self.feasible_set.num_vars:
            raise ValueError(f"scenario width {S.shape[1]} != variable count {self.feasible_set.num_vars}")
        if not np.all(np.isfinite(S)):
            raise ValueError("scenario costs must be finite")
        if any(a != 0.0 for a in self.feasible_set.objective.values()):
            raise ValueError("feasible_set must not carry an objective")
        if not all(v.is_binary for v in self.feasible_set.variables):
            raise ValueError("feasible_set variables must all be binary")
        S.setflags(write=False)
        object.__setattr__(self, "scenarios", S)

    @property
    def n(self) -> int:
        return self.scenarios.shape[1]

    @property
    def m(self) -> int:
        return self.scenarios.shape[0]


def binary_points(n: int, lo: int = 0, hi: Optional[int] = None) -> np.ndarray:
    """Rows are the binary expansions of ``lo .. hi-1`` (bit ``j`` is column ``j``)."""
    hi = (1 << n) if hi is None else hi
    codes = np.arange(lo, hi, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(np.int8)


def enumerate_feasible(model: LinearModel, cap: int = MAX_FEASIBLE_POINTS) -> np.ndarray:
    """All binary points satisfying ``model``'s constraints, as a ``(P, n)`` array."""
    n = model.num_vars
    if n > MAX_ENUMERATED_VARS:
        raise CapacityError(f"{n} binary variables is too many to enumerate (limit {MAX_ENUMERATED_VARS})")
    A, b, rel = model.constraint_matrix()
    rel_arr = np.array([r.value for r in rel])
    lb, ub = model.bounds_arrays()
    found = []
    total = 0
    for lo in range(0, 1 << n, _CHUNK):
        X = binary_points(n, lo, min(lo + _CHUNK, 1 << n))
        ok = np.all((X >= lb - 1e-9) & (X <= ub + 1e-9), axis=1)
        if A.shape[0]:
            lhs = X @ A.T
            viol = np.where(rel_arr == "<=", lhs - b, np.where(rel_arr == ">=", b - lhs, np.abs(lhs - b)))
            ok &= np.all(viol <= 1e-9, axis=1)
        total += int(ok.sum())
        if total > cap:
            raise CapacityError(f"more than {cap} feasible points; use row generation or the heuristic")
        found.append(X[ok])
    return np.concatenate(found) if found else np.zeros((0, n), dtype=np.int8)


def master_model(instance: SingleStageInstance, index_set: Sequence[int]) -> tuple[LinearModel, int]:
    """Epigraph model ``min t`` with ``t >= (c^i)^T x`` for ``i`` in ``index_set``."""
    model = instance.feasible_set.copy()
    model.set_objective({}, Sense.MINIMIZE)
    t = model.add_var("t", -math.inf, math.inf, obj=1.0)
    for i in index_set:
        coeffs = {j: float(v) for j, v in enumerate(instance.scenarios[i]) if v != 0.0}
        coeffs[t] = -1.0
        model.add_constraint(coeffs, Relation.LE, 0.0, f"epi{i}")
    return model, t


def solve_single_master(
    instance: SingleStageInstance,
    index_set: Sequence[int],
    deadline: Optional[float] = None,
    backend: Optional[str] = None,
) -> MasterResult:
    model, _ = master_model(instance, [int(i) for i in index_set])
    sol = solve_milp(model, deadline=deadline, backend=backend)
    if sol.status is SolveStatus.INFEASIBLE:
        return MasterResult(SolveStatus.INFEASIBLE, math.inf, math.inf, None)
    if sol.status not in (SolveStatus.OPTIMAL, SolveStatus.TIME_LIMIT):
        raise RuntimeError(f"master solve failed with status {sol.status.value}")
    x = None
    if sol.has_values:
        x = np.round(sol.values[: instance.n]).astype(np.int8)
    return MasterResult(sol.status, sol.objective, sol.lower_bound, x)


def scenario_generation_ro(
    instance: SingleStageInstance,
    start: Sequence[int],
    deadline: Optional[float] = None,
    backend: Optional[str] = None,
    tol: float = CONVERGENCE_TOL,
) -> CCGResult:
    """Alternate master and adversarial problems until no scenario improves the bound."""
    start = [int(i) for i in start]
    if not start:
        raise ValueError("start set must not be empty")
    if min(start) < 0 or max(start) >= instance.m or len(set(start)) != len(start):
        raise ValueError("start must hold distinct indices in range")
    t0 = time.monotonic()
    index_set = list(start)
    records: list[IterationRecord] = []
    lower = -math.inf
    best_upper, best_x = math.inf, None
    converged = False
    while True:
        remaining = None
        if deadline is not None:
            remaining = deadline - (time.monotonic() - t0)
            if remaining <= 0 and records:
                break
            remaining = max(remaining, 0.0)
        res = solve_single_master(instance, index_set, remaining, backend)
        if res.status is SolveStatus.INFEASIBLE:
            return CCGResult(records, None, math.inf, False, start, index_set, SolveStatus.INFEASIBLE)
        lower = max(lower, res.lower_bound)
        if res.x is None:
            records.append(IterationRecord(lower, math.inf, None, time.monotonic() - t0, res.status.value))
            break
        costs = instance.scenarios @ res.x
        idx = int(np.argmax(costs))
        upper = float(costs[idx])
        if upper < best_upper:
            best_upper, best_x = upper, res.x
        optimal = res.status is SolveStatus.OPTIMAL
        if upper <= res.value + tol or idx in index_set:
            converged = optimal and upper - lower <= tol
            records.append(IterationRecord(lower, upper, None, time.monotonic() - t0, res.status.value))
            break
        index_set.append(idx)
        records.append(IterationRecord(lower, upper, idx, time.monotonic() - t0, res.status.value))
        if not optimal:
            break
    status = SolveStatus.OPTIMAL if converged else SolveStatus.TIME_LIMIT
    return CCGResult(records, best_x, best_upper, converged, start, index_set, status)


def robust_value_ro(instance: SingleStageInstance, index_set: Optional[Sequence[int]] = None):
    """Enumeration oracle: ``(value, x)`` of ``min_x max_{i in index_set} (c^i)^T x``."""
    X = enumerate_feasible(instance.feasible_set)
    if not len(X):
        return math.inf, None
    C = instance.scenarios if index_set is None else instance.scenarios[list(index_set)]
    worst = (X @ C.T).max(axis=1)
    j = int(np.argmin(worst))
    return float(worst[j]), X[j].copy()
