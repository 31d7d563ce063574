"""Adapter running a :class:`LinearModel` through scipy's HiGHS MILP solver."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..core import Solution, SolveStatus
from .model import LinearModel, Relation, Sense


def solve_highs(model: LinearModel, deadline: Optional[float] = None) -> Solution:
    A, b, rel = model.constraint_matrix()
    sign = 1.0 if model.sense is Sense.MINIMIZE else -1.0
    c = sign * model.objective_vector()
    lb, ub = model.bounds_arrays()
    lo = np.where([r is Relation.GE or r is Relation.EQ for r in rel], b, -np.inf)
    hi = np.where([r is Relation.LE or r is Relation.EQ for r in rel], b, np.inf)
    cons = [LinearConstraint(A, lo, hi)] if model.num_constraints else []
    # HiGHS stops at a 1e-4 relative gap by default, too loose for 1e-6 comparisons
    options = {"presolve": True, "mip_rel_gap": 1e-9}
    if deadline is not None:
        options["time_limit"] = max(float(deadline), 1e-3)
    res = milp(
        c,
        constraints=cons,
        integrality=model.integrality().astype(int),
        bounds=Bounds(lb, ub),
        options=options,
    )
    const = model.objective_constant
    dual = getattr(res, "mip_dual_bound", None)
    if res.status == 0:
        obj = sign * float(res.fun) + const
        return Solution(SolveStatus.OPTIMAL, obj, obj, np.asarray(res.x))
    if res.status == 2:
        return Solution(SolveStatus.INFEASIBLE)
    if res.status == 3:
        inf = -sign * math.inf
        return Solution(SolveStatus.UNBOUNDED, inf, inf)
    if res.status == 1:
        x = None if res.x is None else np.asarray(res.x)
        obj = math.nan if res.fun is None else sign * float(res.fun) + const
        bound = math.nan if dual is None else sign * float(dual) + const
        return Solution(SolveStatus.TIME_LIMIT, obj, bound, x)
    return Solution(SolveStatus.ERROR)
