"""LP-based branch-and-bound for mixed-integer models.

Best-bound node selection with depth-first tie-breaking and most-fractional
branching. Children are warm-started from the parent's optimal basis.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from typing import Optional

import numpy as np

from ..core import Solution, SolveStatus
from .model import LinearModel
from .simplex import LPData, simplex

log = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_TOL = 1e-9


class SolverFailure(RuntimeError):
    pass


def _prunable(bound: float, incumbent: float) -> bool:
    return bound >= incumbent - PRUNE_TOL - 1e-12 * abs(incumbent)


def branch_and_bound(
    model: LinearModel,
    deadline: Optional[float] = None,
    node_limit: Optional[int] = None,
) -> Solution:
    """Solve ``model`` exactly, or until ``deadline`` seconds have elapsed."""
    t_end = None if deadline is None else time.monotonic() + deadline
    data = LPData.from_model(model)
    n = data.n
    is_int = model.integrality()
    int_idx = np.flatnonzero(is_int)
    lb0, ub0 = model.bounds_arrays()
    # integer bounds can be rounded inward without losing points
    lb0[int_idx] = np.ceil(lb0[int_idx] - INT_TOL)
    ub0[int_idx] = np.floor(ub0[int_idx] + INT_TOL)

    inc_obj = math.inf
    inc_x: Optional[np.ndarray] = None
    counter = itertools.count()
    heap: list = []
    heapq.heappush(heap, (-math.inf, 0, next(counter), lb0, ub0, None))
    nodes = 0
    iters = 0
    timed_out = False
    open_bound = math.inf  # bound of a node interrupted mid-solve

    def finish(status: SolveStatus, bound: float) -> Solution:
        if inc_x is not None:
            obj = data.sign * inc_obj + data.constant
        else:
            obj = math.nan
        bb = data.sign * bound + data.constant if math.isfinite(bound) else data.sign * bound
        return Solution(status, obj, bb, inc_x, nodes=nodes, iterations=iters)

    while heap:
        if t_end is not None and time.monotonic() > t_end:
            timed_out = True
            break
        if node_limit is not None and nodes >= node_limit:
            timed_out = True
            break
        bound, negdepth, _, lb, ub, warm = heapq.heappop(heap)
        if _prunable(bound, inc_obj):
            continue
        nodes += 1
        res = simplex(data, lb, ub, warm=warm, deadline=t_end)
        iters += res.iterations
        if res.status is SolveStatus.ERROR and warm is not None:
            res = simplex(data, lb, ub, warm=None, deadline=t_end)
            iters += res.iterations
        if res.status is SolveStatus.TIME_LIMIT:
            timed_out = True
            open_bound = bound
            break
        if res.status is SolveStatus.ERROR:
            log.error("LP failure at node %d; aborting", nodes)
            return Solution(SolveStatus.ERROR, nodes=nodes, iterations=iters)
        if res.status is SolveStatus.INFEASIBLE:
            continue
        if res.status is SolveStatus.UNBOUNDED:
            if nodes == 1:
                return finish(SolveStatus.UNBOUNDED, -math.inf)
            continue
        obj = res.objective
        # a child relaxation can never beat its parent's bound
        assert obj >= bound - 1e-6 * max(1.0, abs(bound)), (obj, bound)
        obj = max(obj, bound)
        if _prunable(obj, inc_obj):
            continue
        x = res.x
        frac = np.abs(x[int_idx] - np.round(x[int_idx]))
        if frac.size == 0 or frac.max() <= INT_TOL:
            xr = x.copy()
            xr[int_idx] = np.round(xr[int_idx])
            val = float(data.c[:n] @ xr)
            if val < inc_obj:
                inc_obj, inc_x = val, xr
            continue
        k = int(np.argmax(frac))
        j = int(int_idx[k])
        v = x[j]
        down_ub = ub.copy()
        down_ub[j] = math.floor(v)
        up_lb = lb.copy()
        up_lb[j] = math.ceil(v)
        depth = -negdepth + 1
        children = [(lb, down_ub), (up_lb, ub)]
        if v - math.floor(v) > 0.5:
            children.reverse()
        for clb, cub in children:
            heapq.heappush(heap, (obj, -depth, next(counter), clb, cub, res.basis))

    if timed_out:
        remaining = min([h[0] for h in heap] + [open_bound])
        best = min(remaining, inc_obj)
        assert best <= inc_obj + 1e-9
        return finish(SolveStatus.TIME_LIMIT, best)
    if inc_x is None:
        return finish(SolveStatus.INFEASIBLE, math.inf)
    return finish(SolveStatus.OPTIMAL, inc_obj)
