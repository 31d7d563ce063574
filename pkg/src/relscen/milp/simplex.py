"""Bounded-variable primal simplex on a dense explicit basis inverse.

Rows are brought to equality form ``A x + s = b`` with one slack per row whose
bounds encode the relation (``<=``: s >= 0, ``>=``: s <= 0, ``=``: s = 0). The
all-slack basis is always a valid start; infeasibility of the basic variables
is removed by a composite phase 1 that minimizes the sum of bound violations.
Any basis (e.g. the parent's in branch-and-bound) can seed a solve.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import Solution, SolveStatus
from .model import LinearModel, Relation, Sense

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-7
DEGENERATE_STEP = 1e-11
BLAND_AFTER = 200
REFACTOR_EVERY = 50

AT_LB, AT_UB, FREE, BASIC = 0, 1, 2, 3


@dataclass
class LPData:
    """Dense standard-form data shared by every solve of one model."""

    A: np.ndarray  # r x (n + r), slacks appended as identity
    b: np.ndarray
    c: np.ndarray  # length n + r, minimization costs
    lb: np.ndarray
    ub: np.ndarray
    n: int
    r: int
    sign: float  # +1 minimize, -1 maximize (objective was negated)
    constant: float

    @classmethod
    def from_model(cls, model: LinearModel) -> "LPData":
        A, b, rel = model.constraint_matrix()
        n, r = model.num_vars, model.num_constraints
        lb, ub = model.bounds_arrays()
        slb = np.zeros(r)
        sub = np.zeros(r)
        for i, rl in enumerate(rel):
            if rl is Relation.LE:
                sub[i] = math.inf
            elif rl is Relation.GE:
                slb[i] = -math.inf
        sign = 1.0 if model.sense is Sense.MINIMIZE else -1.0
        c = np.concatenate([sign * model.objective_vector(), np.zeros(r)])
        return cls(
            np.hstack([A, np.eye(r)]),
            b,
            c,
            np.concatenate([lb, slb]),
            np.concatenate([ub, sub]),
            n,
            r,
            sign,
            model.objective_constant,
        )


@dataclass
class Basis:
    basic: np.ndarray  # r variable indices
    status: np.ndarray  # per variable: AT_LB / AT_UB / FREE / BASIC


@dataclass
class LPResult:
    status: SolveStatus
    objective: float  # in minimization form (sign applied)
    x: Optional[np.ndarray]
    basis: Optional[Basis]
    iterations: int


def _initial_status(lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
    st = np.full(lb.shape[0], AT_LB, dtype=np.int8)
    lo_inf = ~np.isfinite(lb)
    hi_inf = ~np.isfinite(ub)
    st[lo_inf & ~hi_inf] = AT_UB
    st[lo_inf & hi_inf] = FREE
    return st


def simplex(
    data: LPData,
    lb: Optional[np.ndarray] = None,
    ub: Optional[np.ndarray] = None,
    warm: Optional[Basis] = None,
    deadline: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> LPResult:
    """Solve the LP relaxation with optional overridden structural bounds.

    ``deadline`` is an absolute ``time.monotonic()`` value.
    """
    A, b, c = data.A, data.b, data.c
    n, r = data.n, data.r
    N = n + r
    lo = data.lb.copy()
    hi = data.ub.copy()
    if lb is not None:
        lo[:n] = lb
    if ub is not None:
        hi[:n] = ub
    if np.any(lo > hi + FEAS_TOL):
        return LPResult(SolveStatus.INFEASIBLE, math.inf, None, None, 0)
    if max_iter is None:
        max_iter = 50 * (N + r) + 1000

    status = None
    basic = None
    Binv = None
    if warm is not None:
        status = warm.status.copy()
        basic = warm.basic.copy()
        # bounds may have moved under nonbasic variables; re-seat them
        for j in np.flatnonzero(status != BASIC):
            if status[j] == AT_LB and not math.isfinite(lo[j]):
                status[j] = AT_UB if math.isfinite(hi[j]) else FREE
            elif status[j] == AT_UB and not math.isfinite(hi[j]):
                status[j] = AT_LB if math.isfinite(lo[j]) else FREE
        try:
            Binv = np.linalg.inv(A[:, basic])
        except np.linalg.LinAlgError:
            status = None
    if status is None:
        status = _initial_status(lo, hi)
        basic = np.arange(n, N)
        status[basic] = BASIC
        Binv = np.eye(r)

    x = np.zeros(N)

    def seat_nonbasic() -> None:
        nb = status != BASIC
        x[nb] = np.where(status[nb] == AT_LB, lo[nb], np.where(status[nb] == AT_UB, hi[nb], 0.0))

    def recompute_basic() -> None:
        xn = x.copy()
        xn[basic] = 0.0
        x[basic] = Binv @ (b - A @ xn)

    seat_nonbasic()
    recompute_basic()
    movable = lo < hi
    it = 0

    if warm is not None:
        outcome, it = _dual_phase(A, b, c, lo, hi, movable, basic, status, Binv, x, deadline, max_iter)
        if outcome is SolveStatus.INFEASIBLE:
            return LPResult(SolveStatus.INFEASIBLE, math.inf, None, None, it)
        if outcome is SolveStatus.TIME_LIMIT:
            return LPResult(SolveStatus.TIME_LIMIT, math.nan, None, None, it)
        if outcome is SolveStatus.ERROR:
            # numerical trouble: the primal loop below restarts from a fresh factorization
            try:
                Binv[:] = np.linalg.inv(A[:, basic])
            except np.linalg.LinAlgError:
                return LPResult(SolveStatus.ERROR, math.nan, None, None, it)
            recompute_basic()

    # Devex reference weights approximate steepest-edge pricing
    weights = np.ones(N)
    was_phase1 = None
    degenerate_run = 0
    bland = False
    since_refactor = 0

    while True:
        if it >= max_iter:
            log.warning("simplex iteration cap %d reached", max_iter)
            return LPResult(SolveStatus.ERROR, math.nan, None, None, it)
        if deadline is not None and it % 25 == 0 and time.monotonic() > deadline:
            return LPResult(SolveStatus.TIME_LIMIT, math.nan, None, None, it)
        if since_refactor >= REFACTOR_EVERY:
            try:
                Binv = np.linalg.inv(A[:, basic])
            except np.linalg.LinAlgError:
                return LPResult(SolveStatus.ERROR, math.nan, None, None, it)
            recompute_basic()
            since_refactor = 0

        xB = x[basic]
        lbB = lo[basic]
        ubB = hi[basic]
        below = xB < lbB - FEAS_TOL
        above = xB > ubB + FEAS_TOL
        phase1 = bool(below.any() or above.any())
        if phase1:
            cB = np.where(below, -1.0, np.where(above, 1.0, 0.0))
            y = cB @ Binv
            d = -(y @ A)
        else:
            cB = c[basic]
            y = cB @ Binv
            d = c - y @ A
        d[basic] = 0.0
        if phase1 != was_phase1:
            weights[:] = 1.0
            was_phase1 = phase1

        can_inc = ((status == AT_LB) | (status == FREE)) & movable & (d < -OPT_TOL)
        can_dec = ((status == AT_UB) | (status == FREE)) & movable & (d > OPT_TOL)
        elig = can_inc | can_dec
        if not elig.any():
            if phase1:
                return LPResult(SolveStatus.INFEASIBLE, math.inf, None, None, it)
            xs = x[:n].copy()
            obj = float(c[:n] @ xs)
            return LPResult(SolveStatus.OPTIMAL, obj, xs, Basis(basic.copy(), status.copy()), it)

        if bland:
            q = int(np.flatnonzero(elig)[0])
        else:
            q = int(np.argmax(np.where(elig, d * d / weights, -1.0)))
        sgn = 1.0 if can_inc[q] else -1.0

        alpha = Binv @ A[:, q]
        g = -sgn * alpha  # rate of change of the basic variables
        # distance of each basic variable to the bound that blocks it
        dist = np.full(r, math.inf)
        hit_upper = np.zeros(r, dtype=bool)
        piv = np.abs(alpha) > PIVOT_TOL
        feas = ~(below | above)

        dec = piv & (g < 0)
        m1 = dec & feas & np.isfinite(lbB)
        dist[m1] = xB[m1] - lbB[m1]
        m2 = dec & above
        dist[m2] = xB[m2] - ubB[m2]
        hit_upper[m2] = True

        inc = piv & (g > 0)
        m3 = inc & feas & np.isfinite(ubB)
        dist[m3] = ubB[m3] - xB[m3]
        hit_upper[m3] = True
        m4 = inc & below
        dist[m4] = lbB[m4] - xB[m4]

        rate = np.abs(g)
        rate[~piv] = 1.0
        np.maximum(dist, 0.0, out=dist)
        ratios = dist / rate
        flip = hi[q] - lo[q]

        if bland:
            tmin = float(ratios.min()) if r else math.inf
            if flip <= tmin:
                p = -1
            else:
                ties = np.flatnonzero(ratios <= tmin + 1e-12)
                p = int(ties[np.argmin(basic[ties])])
        else:
            # Harris: largest step allowed with bounds relaxed by the
            # feasibility tolerance, then the largest pivot within that step
            relaxed = float(((dist + FEAS_TOL) / rate).min()) if r else math.inf
            if flip <= relaxed:
                p = -1
            else:
                cand = np.flatnonzero(ratios <= relaxed)
                p = int(cand[np.argmax(np.abs(alpha[cand]))])

        if p < 0:
            if not math.isfinite(flip):
                if phase1:
                    return LPResult(SolveStatus.ERROR, math.nan, None, None, it)
                return LPResult(SolveStatus.UNBOUNDED, -math.inf, None, None, it)
            x[basic] += g * flip
            if sgn > 0:
                x[q] = hi[q]
                status[q] = AT_UB
            else:
                x[q] = lo[q]
                status[q] = AT_LB
            degenerate_run = 0
            bland = False
            it += 1
            continue

        t = float(ratios[p])
        leaving = int(basic[p])

        x[basic] += g * t
        x[q] += sgn * t
        if hit_upper[p]:
            x[leaving] = hi[leaving]
            status[leaving] = AT_UB
        else:
            x[leaving] = lo[leaving]
            status[leaving] = AT_LB
        basic[p] = q
        status[q] = BASIC

        prow = Binv[p] / alpha[p]
        ratio_row = prow @ A
        wq = weights[q]
        np.maximum(weights, ratio_row * ratio_row * wq, out=weights)
        weights[leaving] = max(wq / (alpha[p] * alpha[p]), 1.0)
        Binv -= np.outer(alpha, prow)
        Binv[p] = prow
        since_refactor += 1

        if t <= DEGENERATE_STEP:
            degenerate_run += 1
            if degenerate_run > BLAND_AFTER:
                bland = True
        else:
            degenerate_run = 0
            bland = False
        it += 1


def _dual_phase(A, b, c, lo, hi, movable, basic, status, Binv, x, deadline, max_iter):
    """Dual simplex from a dual feasible basis, updating the state in place.

    Returns ``(outcome, iterations)``. ``outcome`` is ``None`` when the basis is
    not dual feasible (nothing was done), ``OPTIMAL`` once the basis is primal
    feasible, ``INFEASIBLE`` with a row certificate, and ``ERROR`` when the
    caller should fall back to the primal method.
    """
    d = c - (c[basic] @ Binv) @ A
    d[basic] = 0.0
    lower_side = (status == AT_LB) | (status == FREE)
    upper_side = (status == AT_UB) | (status == FREE)
    if np.any(movable & ((lower_side & (d < -OPT_TOL)) | (upper_side & (d > OPT_TOL)))):
        return None, 0

    it = 0
    since_refactor = 0
    row_weights = np.ones(len(basic))  # dual Devex weights per basis row
    while True:
        if it >= max_iter:
            return SolveStatus.ERROR, it
        if deadline is not None and it % 25 == 0 and time.monotonic() > deadline:
            return SolveStatus.TIME_LIMIT, it
        if since_refactor >= REFACTOR_EVERY:
            try:
                Binv[:] = np.linalg.inv(A[:, basic])
            except np.linalg.LinAlgError:
                return SolveStatus.ERROR, it
            xn = x.copy()
            xn[basic] = 0.0
            x[basic] = Binv @ (b - A @ xn)
            d = c - (c[basic] @ Binv) @ A
            d[basic] = 0.0
            since_refactor = 0

        xB = x[basic]
        lbB = lo[basic]
        ubB = hi[basic]
        viol = np.maximum(lbB - xB, 0.0) + np.maximum(xB - ubB, 0.0)
        if not len(basic) or viol.max() <= FEAS_TOL:
            return SolveStatus.OPTIMAL, it
        p = int(np.argmax(np.where(viol > FEAS_TOL, viol * viol / row_weights, -1.0)))
        up = bool(xB[p] < lbB[p])
        target = float(lbB[p] if up else ubB[p])

        row = Binv[p] @ A
        row[basic] = 0.0
        lower_side = ((status == AT_LB) | (status == FREE)) & movable
        upper_side = ((status == AT_UB) | (status == FREE)) & movable
        if up:
            elig = (lower_side & (row < -PIVOT_TOL)) | (upper_side & (row > PIVOT_TOL))
        else:
            elig = (lower_side & (row > PIVOT_TOL)) | (upper_side & (row < -PIVOT_TOL))
        if not elig.any():
            # the row cannot reach its bound through meaningful pivots; certify
            # with the full row range before declaring infeasibility
            nbm = (status != BASIC) & movable
            room_up = np.where(nbm, hi - x, 0.0)
            room_dn = np.where(nbm, x - lo, 0.0)
            sign = 1.0 if up else -1.0
            with np.errstate(invalid="ignore"):
                gain = np.where(sign * row < 0, np.abs(row) * room_up, np.abs(row) * room_dn)
            gain[row == 0.0] = 0.0
            reach = float(gain.sum())
            if math.isfinite(reach) and reach < viol[p] - FEAS_TOL:
                return SolveStatus.INFEASIBLE, it
            return SolveStatus.ERROR, it

        # bound-flipping ratio test: pass breakpoints of boxed variables while
        # the dual objective keeps improving, flipping them to their other bound
        a = np.abs(row)
        js = np.flatnonzero(elig)
        order = js[np.lexsort((-a[js], np.abs(d[js]) / a[js]))]
        slope = float(viol[p])
        flips = []
        q = int(order[-1])
        for j in order[:-1]:
            span = hi[j] - lo[j]
            if status[j] != FREE and math.isfinite(span) and slope - a[j] * span > FEAS_TOL:
                slope -= a[j] * span
                flips.append(int(j))
                continue
            q = int(j)
            break
        theta = d[q] / row[q]
        if flips:
            fl = np.asarray(flips)
            to_ub = status[fl] == AT_LB
            delta = np.where(to_ub, hi[fl] - lo[fl], lo[fl] - hi[fl])
            x[fl] += delta
            status[fl] = np.where(to_ub, AT_UB, AT_LB)
            x[basic] -= Binv @ (A[:, fl] @ delta)
            xB = x[basic]

        col = Binv @ A[:, q]
        if abs(col[p]) < PIVOT_TOL:
            return SolveStatus.ERROR, it
        step = (xB[p] - target) / col[p]
        x[basic] -= col * step
        x[q] += step
        leaving = int(basic[p])
        x[leaving] = target
        status[leaving] = AT_LB if up else AT_UB
        basic[p] = q
        status[q] = BASIC

        d -= theta * row
        d[leaving] = -theta
        d[basic] = 0.0

        wp = row_weights[p]
        np.maximum(row_weights, (col / col[p]) ** 2 * wp, out=row_weights)
        row_weights[p] = max(wp / (col[p] * col[p]), 1.0)

        prow = Binv[p] / col[p]
        Binv -= np.outer(col, prow)
        Binv[p] = prow
        since_refactor += 1
        it += 1


def solve_lp(model: LinearModel, deadline: Optional[float] = None) -> Solution:
    """Solve the continuous relaxation of ``model``.

    ``deadline`` is a duration in seconds (``None`` for no limit).
    """
    data = LPData.from_model(model)
    abs_deadline = None if deadline is None else time.monotonic() + deadline
    res = simplex(data, deadline=abs_deadline)
    return lp_result_to_solution(res, data)


def lp_result_to_solution(res: LPResult, data: LPData) -> Solution:
    if res.status is SolveStatus.OPTIMAL:
        obj = data.sign * res.objective + data.constant
        return Solution(SolveStatus.OPTIMAL, obj, obj, res.x, iterations=res.iterations)
    if res.status is SolveStatus.INFEASIBLE:
        return Solution(SolveStatus.INFEASIBLE, math.nan, math.nan, None, iterations=res.iterations)
    if res.status is SolveStatus.UNBOUNDED:
        inf = -data.sign * math.inf
        return Solution(SolveStatus.UNBOUNDED, inf, inf, None, iterations=res.iterations)
    return Solution(res.status, math.nan, math.nan, None, iterations=res.iterations)
