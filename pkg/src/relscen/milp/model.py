from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np


class Sense(str, enum.Enum):
    MINIMIZE = "Minimize"
    MAXIMIZE = "Maximize"


class Relation(str, enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    integer: bool = False

    @property
    def is_binary(self) -> bool:
        return self.integer and self.lb == 0.0 and self.ub == 1.0


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, float], ...]
    relation: Relation
    rhs: float
    name: Optional[str] = None


class ModelError(ValueError):
    pass


@dataclass
class LinearModel:
    """Mixed-integer linear program built incrementally.

    Solvers never mutate a model; once handed to a solver it can be shared.
    """

    sense: Sense = Sense.MINIMIZE
    variables: list[Variable] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    objective_constant: float = 0.0
    _names: dict[str, int] = field(default_factory=dict, repr=False)

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_var(
        self,
        name: str,
        lb: float = 0.0,
        ub: float = math.inf,
        integer: bool = False,
        obj: float = 0.0,
    ) -> int:
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")
        if lb > ub:
            raise ModelError(f"variable {name!r}: lower bound {lb} > upper bound {ub}")
        if integer and not (math.isfinite(lb) and math.isfinite(ub)):
            raise ModelError(f"integer variable {name!r} needs finite bounds")
        idx = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), integer))
        self._names[name] = idx
        if obj:
            self.objective[idx] = float(obj)
        return idx

    def add_binary(self, name: str, obj: float = 0.0) -> int:
        return self.add_var(name, 0.0, 1.0, integer=True, obj=obj)

    def add_constraint(
        self,
        coeffs: Mapping[int, float],
        relation: Relation | str,
        rhs: float,
        name: Optional[str] = None,
    ) -> int:
        relation = Relation(relation)
        items = []
        for j, a in coeffs.items():
            if not 0 <= j < len(self.variables):
                raise ModelError(f"constraint {name or len(self.constraints)}: variable index {j} out of range")
            if a != 0.0:
                items.append((int(j), float(a)))
        self.constraints.append(Constraint(tuple(sorted(items)), relation, float(rhs), name))
        return len(self.constraints) - 1

    def set_objective(self, coeffs: Mapping[int, float], sense: Sense | str | None = None) -> None:
        self.objective = {int(j): float(a) for j, a in coeffs.items() if a != 0.0}
        if sense is not None:
            self.sense = Sense(sense)

    def index(self, name: str) -> int:
        return self._names[name]

    def copy(self) -> "LinearModel":
        out = LinearModel(self.sense, list(self.variables), dict(self.objective), list(self.constraints), self.objective_constant)
        out._names = dict(self._names)
        return out

    def with_bounds(self, bounds: Mapping[int, tuple[float, float]]) -> "LinearModel":
        out = self.copy()
        for j, (lb, ub) in bounds.items():
            v = out.variables[j]
            out.variables[j] = Variable(v.name, float(lb), float(ub), v.integer)
        return out

    def relaxed(self) -> "LinearModel":
        out = self.copy()
        out.variables = [Variable(v.name, v.lb, v.ub, False) for v in self.variables]
        return out

    # dense views used by the solvers

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=np.float64)
        ub = np.array([v.ub for v in self.variables], dtype=np.float64)
        return lb, ub

    def integrality(self) -> np.ndarray:
        return np.array([v.integer for v in self.variables], dtype=bool)

    def constraint_matrix(self) -> tuple[np.ndarray, np.ndarray, list[Relation]]:
        A = np.zeros((self.num_constraints, self.num_vars))
        b = np.zeros(self.num_constraints)
        rel = []
        for i, con in enumerate(self.constraints):
            for j, a in con.coeffs:
                A[i, j] += a
            b[i] = con.rhs
            rel.append(con.relation)
        return A, b, rel

    def evaluate(self, x: np.ndarray) -> float:
        return self.objective_constant + sum(a * x[j] for j, a in self.objective.items())

    def violation(self, x: np.ndarray) -> float:
        """Largest bound or constraint violation of point ``x``."""
        worst = 0.0
        for j, v in enumerate(self.variables):
            worst = max(worst, v.lb - x[j], x[j] - v.ub)
        for con in self.constraints:
            lhs = sum(a * x[j] for j, a in con.coeffs)
            if con.relation is Relation.LE:
                worst = max(worst, lhs - con.rhs)
            elif con.relation is Relation.GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst
