"""Exact master problems by branching over route unions.

For fixed scenarios the best first stage buys every arc with negative cost
plus the union of the routes the scenarios drive on, so the master reduces to
choosing one route per scenario. A depth-first search assigns routes scenario
by scenario and prunes with the bound

    c(U) + max_j min_r [c(r \\ U) + max(M, d_j(r))]

over unassigned scenarios ``j``, where ``U`` is the bought arc set and ``M``
the largest second-stage cost assigned so far. Only practical while the route
list is short (layered shortest-path graphs, small tours).
"""

from __future__ import annotations

import math
import time
from typing import Optional, Sequence

import numpy as np

from ..core import ProblemKind, SolveStatus, TwoStageInstance
from ..netmodels import route_matrix, routes

MAX_ROUTES = 5000
_EPS = 1e-9


def route_count(instance: TwoStageInstance) -> int:
    """Number of recourse routes, counted without listing them."""
    g = instance.graph
    if instance.problem_kind is ProblemKind.TSP:
        return math.factorial(g.node_count - 1)
    ways = np.zeros(g.node_count)
    ways[g.sink] = 1.0
    out: list[list[int]] = [[] for _ in range(g.node_count)]
    for t, h in g.arcs:
        out[t].append(h)
    for v in reversed(_topological_order(g.node_count, out, g.source)):
        if v != g.sink:
            ways[v] = sum(ways[h] for h in out[v])
    return int(ways[g.source])


def _topological_order(n: int, out: list[list[int]], start: int) -> list[int]:
    seen = [False] * n
    order: list[int] = []
    stack = [(start, iter(out[start]))]
    seen[start] = True
    while stack:
        v, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            order.append(v)
            stack.pop()
        elif not seen[nxt]:
            seen[nxt] = True
            stack.append((nxt, iter(out[nxt])))
    return order[::-1]


class RouteTable:
    """Route incidences and route costs of one instance, reused across master solves."""

    def __init__(self, instance: TwoStageInstance, max_routes: int = MAX_ROUTES):
        if route_count(instance) > max_routes:
            raise ValueError(f"more than {max_routes} routes")
        self.instance = instance
        self.R = route_matrix(routes(instance), instance.q).astype(bool)
        self.costs = instance.scenarios @ self.R.T  # (m, routes)
        c = instance.first_stage_costs
        self.base = c < 0
        self.base_cost = float(c[self.base].sum())
        self.cplus = np.where(self.base, 0.0, c)

    def solve(self, index_set: Sequence[int], deadline: Optional[float] = None):
        """``(status, value, lower_bound, x)`` of the master over ``index_set``."""
        index_set = [int(i) for i in index_set]
        if not index_set:
            v = self.base_cost
            return SolveStatus.OPTIMAL, v, v, self.base.astype(np.int8)
        if len(self.R) == 0:
            return SolveStatus.INFEASIBLE, math.inf, math.inf, None
        stop = None if deadline is None else time.monotonic() + deadline
        return _search(self.R, self.costs[index_set], self.cplus, self.base, self.base_cost, stop)


def _search(R, D, cplus, base, base_cost, stop):
    k = D.shape[0]
    best = [math.inf, None]
    timed_out = [False]
    Rf = R.astype(np.float64)

    def bound(U, M, open_):
        ext = Rf @ np.where(U, 0.0, cplus)
        totals = ext[None, :] + np.maximum(M, D[open_])
        mins = totals.min(axis=1)
        j = int(np.argmax(mins))
        return max(float(mins[j]), M), open_[j], ext, totals[j]

    def dive(U, cU, M, open_):
        if stop is not None and time.monotonic() > stop:
            timed_out[0] = True
            return
        if not open_:
            if cU + M < best[0] - _EPS:
                best[0], best[1] = cU + M, U.copy()
            return
        lb, j, ext, totals = bound(U, M, open_)
        if cU + lb >= best[0] - _EPS:
            return
        rest = [i for i in open_ if i != j]
        inside = ext <= 0.0
        seen_inside = False
        for r in np.argsort(totals, kind="stable"):
            if cU + totals[r] >= best[0] - _EPS:
                break
            if inside[r]:
                # routes already bought differ only in d_j; the cheapest one dominates
                if seen_inside:
                    continue
                seen_inside = True
            dive(U | R[r], cU + ext[r], max(M, D[j, r]), rest)
            if timed_out[0]:
                return

    root_lb, *_ = bound(base.copy(), -math.inf, list(range(k)))
    dive(base.copy(), 0.0, -math.inf, list(range(k)))
    value = best[0] + base_cost
    if timed_out[0]:
        x = None if best[1] is None else best[1].astype(np.int8)
        return SolveStatus.TIME_LIMIT, value, root_lb + base_cost, x
    return SolveStatus.OPTIMAL, value, value, best[1].astype(np.int8)
