"""Mixed-binary linear programming: model, simplex, branch-and-bound, LP export."""

from __future__ import annotations

import os
from typing import Optional

from ..core import Solution, SolveStatus
from .bnb import branch_and_bound
from .lp_format import export_lp
from .model import Constraint, LinearModel, ModelError, Relation, Sense, Variable
from .simplex import solve_lp

BACKENDS = ("native", "highs")


def default_backend() -> str:
    return os.environ.get("RELSCEN_MILP_BACKEND", "native")


def solve_milp(
    model: LinearModel,
    deadline: Optional[float] = None,
    backend: Optional[str] = None,
) -> Solution:
    """Solve ``model`` to optimality or until ``deadline`` seconds elapse.

    ``backend`` selects the in-house branch-and-bound (``"native"``) or scipy's
    HiGHS (``"highs"``); the default comes from ``RELSCEN_MILP_BACKEND``.
    """
    backend = backend or default_backend()
    if backend == "native":
        return branch_and_bound(model, deadline=deadline)
    if backend == "highs":
        from .highs import solve_highs

        return solve_highs(model, deadline=deadline)
    raise ValueError(f"unknown MILP backend {backend!r}; expected one of {BACKENDS}")


__all__ = [
    "BACKENDS",
    "Constraint",
    "LinearModel",
    "ModelError",
    "Relation",
    "Sense",
    "Solution",
    "SolveStatus",
    "Variable",
    "export_lp",
    "solve_lp",
    "solve_milp",
]
