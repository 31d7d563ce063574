"""Scenario generation, column-and-constraint generation, and exact scenario choice."""

from __future__ import annotations

from .ccg import (
    CONVERGENCE_TOL,
    MASTER_BACKENDS,
    CCGResult,
    IterationRecord,
    MasterResult,
    ccg,
    master_value,
    solve_master,
)
from .rsrp import (
    MAX_SUBSETS,
    brute_force_robust,
    pareto_minimal,
    rsrp_2ro_direct,
    rsrp_brute_force,
    rsrp_exact_2ro,
    rsrp_exact_ro,
    scenario_cost_table,
)
from .routes import MAX_ROUTES, RouteTable, route_count
from .single_stage import (
    MAX_FEASIBLE_POINTS,
    CapacityError,
    SingleStageInstance,
    enumerate_feasible,
    master_model,
    robust_value_ro,
    scenario_generation_ro,
    solve_single_master,
)

__all__ = [
    "CONVERGENCE_TOL",
    "MASTER_BACKENDS",
    "MAX_FEASIBLE_POINTS",
    "MAX_ROUTES",
    "MAX_SUBSETS",
    "CCGResult",
    "CapacityError",
    "IterationRecord",
    "MasterResult",
    "RouteTable",
    "SingleStageInstance",
    "brute_force_robust",
    "ccg",
    "enumerate_feasible",
    "master_model",
    "master_value",
    "pareto_minimal",
    "robust_value_ro",
    "route_count",
    "rsrp_2ro_direct",
    "rsrp_brute_force",
    "rsrp_exact_2ro",
    "rsrp_exact_ro",
    "scenario_cost_table",
    "scenario_generation_ro",
    "solve_master",
    "solve_single_master",
]
