"""Exact and brute-force solvers for choosing the k scenarios with the largest master bound.

Both exact models share one structure. Every row stands for a candidate
solution and lists its cost under each scenario; binary ``u`` picks at most
``k`` scenarios and, per row, a convex combination ``z`` of the picked
scenarios' costs bounds ``tau`` from above. For fixed ``u`` the best ``z`` sits
at the picked scenario with the largest cost, so ``z`` may stay continuous.
"""

from __future__ import annotations

import itertools
import math
from typing import Optional, Sequence, Union

import numpy as np

from ..core import ProblemKind, SolveStatus, TwoStageInstance
from ..milp import LinearModel, Relation, Sense, solve_milp
from ..netmodels import (
    enumerate_paths,
    enumerate_tours,
    route_matrix,
    second_stage_values,
    solve_deterministic,
)
from .ccg import CONVERGENCE_TOL, solve_master
from .single_stage import (
    MAX_FEASIBLE_POINTS,
    CapacityError,
    SingleStageInstance,
    binary_points,
    enumerate_feasible,
    solve_single_master,
)

MAX_SUBSETS = 20000
MAX_BRUTE_FORCE_ARCS = 20
ROWGEN_START_POINTS = 10
_CHUNK = 1 << 14

Instance = Union[SingleStageInstance, TwoStageInstance]


def _check_k(k: int, m: int) -> None:
    if not 1 <= k <= m:
        raise ValueError(f"k must lie in [1, {m}], got {k}")


def _check_subsets(m: int, k: int) -> None:
    count = math.comb(m, k)
    if count > MAX_SUBSETS:
        raise CapacityError(f"C({m},{k}) = {count} subsets exceeds the cap of {MAX_SUBSETS}")


def pareto_minimal(V: np.ndarray) -> np.ndarray:
    """Rows of ``V`` not weakly dominated by another row (duplicates kept once)."""
    V = np.unique(np.asarray(V, dtype=np.float64), axis=0)
    order = np.argsort(V.sum(axis=1), kind="stable")
    K = np.empty((0, V.shape[1]))
    for r in V[order]:
        if len(K) and np.any(np.all(K <= r, axis=1)):
            continue
        K = np.vstack([K, r])
    return K


def _row_model(rows: np.ndarray, k: int) -> tuple[LinearModel, list[int], int]:
    """Maximize ``tau`` over scenario picks ``u`` given per-solution cost rows."""
    m = rows.shape[1]
    model = LinearModel(Sense.MAXIMIZE)
    u = [model.add_binary(f"u[{i}]") for i in range(m)]
    tau = model.add_var("tau", -math.inf, math.inf, obj=1.0)
    model.add_constraint({j: 1.0 for j in u}, Relation.LE, float(k), "card")
    for r, v in enumerate(rows):
        _add_row(model, u, tau, v, r)
    return model, u, tau


def _add_row(model: LinearModel, u: list[int], tau: int, v: np.ndarray, r: int) -> None:
    z = [model.add_var(f"z[{r},{i}]", 0.0, 1.0) for i in range(len(u))]
    coeffs = {z[i]: -float(v[i]) for i in range(len(u))}
    coeffs[tau] = 1.0
    model.add_constraint(coeffs, Relation.LE, 0.0, f"worst[{r}]")
    model.add_constraint({zi: 1.0 for zi in z}, Relation.EQ, 1.0, f"assign[{r}]")
    for i, zi in enumerate(z):
        model.add_constraint({zi: 1.0, u[i]: -1.0}, Relation.LE, 0.0, f"pick[{r},{i}]")


def _solve_rows(model: LinearModel, u: list[int], backend: Optional[str]) -> tuple[list[int], float]:
    sol = solve_milp(model, backend=backend)
    if sol.status is not SolveStatus.OPTIMAL:
        raise RuntimeError(f"scenario choice model ended with status {sol.status.value}")
    chosen = [i for i, j in enumerate(u) if sol.values[j] > 0.5]
    return chosen, float(sol.objective)


def _row_generation(
    initial_rows: np.ndarray,
    k: int,
    evaluate,
    backend: Optional[str],
    tol: float = CONVERGENCE_TOL,
    max_rounds: int = 10000,
) -> tuple[list[int], float]:
    """Lazy-row loop: ``evaluate(I)`` returns ``(value of I, row of its optimal solution)``."""
    model, u, tau = _row_model(initial_rows, k)
    n_rows = len(initial_rows)
    for _ in range(max_rounds):
        chosen, bound = _solve_rows(model, u, backend)
        value, row = evaluate(chosen)
        if bound <= value + tol:
            return chosen, value
        _add_row(model, u, tau, row, n_rows)
        n_rows += 1
    raise RuntimeError("row generation did not terminate")


def rsrp_exact_ro(
    instance: SingleStageInstance,
    k: int,
    mode: str = "full",
    backend: Optional[str] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[list[int], float]:
    """Best ``k`` scenarios for a single-stage problem, exactly.

    ``mode="full"`` writes one row per feasible point (dominated points
    dropped, since their rows are implied); ``mode="rowgen"`` starts from
    random feasible points and adds the master's optimal point for the
    current choice until the bound is attained.
    """
    _check_k(k, instance.m)
    C = instance.scenarios
    if mode == "full":
        X = enumerate_feasible(instance.feasible_set, MAX_FEASIBLE_POINTS)
        if not len(X):
            raise ValueError("feasible set is empty")
        rows = pareto_minimal(X @ C.T)
        model, u, _ = _row_model(rows, k)
        return _solve_rows(model, u, backend)
    if mode != "rowgen":
        raise ValueError(f"unknown mode {mode!r}")

    rng = rng if rng is not None else np.random.default_rng(0)
    start = []
    for _ in range(ROWGEN_START_POINTS):
        probe = SingleStageInstance(instance.feasible_set, rng.uniform(-1.0, 1.0, (1, instance.n)))
        res = solve_single_master(probe, [0], backend=backend)
        if res.x is None:
            raise ValueError("feasible set is empty")
        start.append(C @ res.x)

    def evaluate(chosen):
        res = solve_single_master(instance, chosen, backend=backend)
        return res.value, C @ res.x

    return _row_generation(np.unique(np.array(start), axis=0), k, evaluate, backend)


def rsrp_exact_2ro(
    instance: TwoStageInstance,
    k: int,
    method: str = "enumerate",
    backend: Optional[str] = None,
) -> tuple[list[int], float]:
    """Best ``k`` scenarios for a two-stage problem, exactly.

    ``method="enumerate"`` solves one master per size-``k`` subset;
    ``method="direct"`` solves the scenario-choice model with lazily added
    rows over first-stage solutions and their optimal routes.
    """
    _check_k(k, instance.m)
    if method == "direct":
        return rsrp_2ro_direct(instance, k, backend)
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    _check_subsets(instance.m, k)
    best, best_val = None, -math.inf
    for subset in itertools.combinations(range(instance.m), k):
        val = solve_master(instance, subset, backend=backend).value
        if val > best_val + 1e-9:
            best, best_val = list(subset), val
    return best, best_val


def _scenario_costs(instance: TwoStageInstance, x: np.ndarray) -> np.ndarray:
    return float(instance.first_stage_costs @ x) + second_stage_values(instance, x)


def rsrp_2ro_direct(
    instance: TwoStageInstance, k: int, backend: Optional[str] = None
) -> tuple[list[int], float]:
    """Scenario-choice model over (first stage, route tuple) rows, generated lazily.

    Only rows whose routes are optimal for their first stage are ever needed:
    any other route tuple for the same ``x`` yields a weaker row. Start rows
    come from the deterministic optimum of every scenario.
    """
    _check_k(k, instance.m)
    start = []
    for i in range(instance.m):
        det = solve_deterministic(instance, instance.scenarios[i])
        if not math.isfinite(det.value):
            raise ValueError("instance has no feasible route")
        start.append(_scenario_costs(instance, det.x))

    def evaluate(chosen):
        res = solve_master(instance, chosen, backend=backend)
        if res.status is not SolveStatus.OPTIMAL:
            raise RuntimeError(f"master ended with status {res.status.value}")
        return res.value, _scenario_costs(instance, res.x)

    return _row_generation(np.unique(np.array(start), axis=0), k, evaluate, backend)


def _first_stage_chunks(instance: TwoStageInstance):
    """Yield ``(X, Q)`` blocks over binary first stages worth considering.

    ``Q[r, i]`` is the cheapest route under scenario ``i`` using only arcs
    bought by ``X[r]``. A first stage that skips a negative-cost arc, or buys
    a positive-cost arc lying on no usable route, is beaten by its repair
    and is left out.
    """
    q = instance.q
    if q > MAX_BRUTE_FORCE_ARCS:
        raise CapacityError(f"{q} arcs is too many to enumerate (limit {MAX_BRUTE_FORCE_ARCS})")
    g = instance.graph
    route_list = enumerate_paths(g) if instance.problem_kind is ProblemKind.SP else enumerate_tours(g)
    R = route_matrix(route_list, q)
    sizes = R.sum(axis=1)
    route_cost = instance.scenarios @ R.T  # (m, routes)
    c = instance.first_stage_costs
    neg, pos = c < 0, c > 0
    for lo in range(0, 1 << q, _CHUNK):
        X = binary_points(q, lo, min(lo + _CHUNK, 1 << q)).astype(np.float64)
        X = X[np.all(X[:, neg] == 1.0, axis=1)]
        avail = (X @ R.T) >= sizes - 0.5  # route fully bought
        covered = (avail.astype(np.float64) @ R) > 0.5
        keep = avail.any(axis=1) & np.all(covered[:, pos] | (X[:, pos] == 0.0), axis=1)
        if not keep.any():
            continue
        X, avail = X[keep], avail[keep]
        Q = np.where(avail[:, None, :], route_cost[None, :, :], np.inf).min(axis=2)
        yield X, Q


def scenario_cost_table(instance: TwoStageInstance) -> np.ndarray:
    """Rows ``c^T x + Q_i(x)`` over the first stages worth considering (see ``_first_stage_chunks``)."""
    c = instance.first_stage_costs
    rows = [(X @ c)[:, None] + Q for X, Q in _first_stage_chunks(instance)]
    return np.vstack(rows) if rows else np.zeros((0, instance.m))


def brute_force_robust(
    instance: TwoStageInstance, index_set: Optional[Sequence[int]] = None
) -> tuple[float, Optional[np.ndarray]]:
    """Enumeration oracle for the robust optimum over ``index_set`` (all scenarios by default).

    Returns ``(value, x)``; second stages come from the full route list (all
    s-t paths or all tours) restricted to bought arcs.
    """
    idx = list(range(instance.m)) if index_set is None else [int(i) for i in index_set]
    c = instance.first_stage_costs
    best, best_x = math.inf, None
    for X, Q in _first_stage_chunks(instance):
        total = X @ c + Q[:, idx].max(axis=1)
        j = int(np.argmin(total))
        if total[j] < best:
            best, best_x = float(total[j]), X[j].astype(np.int8)
    return best, best_x


def _subset_search(table: np.ndarray, m: int, k: int) -> tuple[list[int], float]:
    best, best_val = None, -math.inf
    for subset in itertools.combinations(range(m), k):
        val = float(table[:, list(subset)].max(axis=1).min())
        if val > best_val + 1e-9:
            best, best_val = list(subset), val
    return best, best_val


def rsrp_brute_force(instance: Instance, k: int) -> tuple[list[int], float]:
    """Exhaustive search over size-``k`` subsets; ties go to the lexicographically smallest.

    Each subset's master value comes from full enumeration of the first
    stage rather than from a solver, so this is independent of the MILP code.
    """
    _check_k(k, instance.m)
    _check_subsets(instance.m, k)
    if isinstance(instance, SingleStageInstance):
        X = enumerate_feasible(instance.feasible_set)
        if not len(X):
            raise ValueError("feasible set is empty")
        table = X @ instance.scenarios.T
    else:
        table = scenario_cost_table(instance)
        if not len(table):
            raise ValueError("instance has no feasible route")
    return _subset_search(table, instance.m, k)
