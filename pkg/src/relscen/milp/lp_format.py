from __future__ import annotations

import math
import re

from .model import LinearModel, Relation, Sense

_BAD = re.compile(r"[^A-Za-z0-9_.\[\]]")


def _name(raw: str) -> str:
    name = _BAD.sub("_", raw)
    if not name or name[0].isdigit() or name[0] in ".eE":
        name = "v_" + name
    return name


def _num(v: float) -> str:
    return repr(float(v))


def _expr(coeffs, names) -> str:
    parts = []
    for j, a in coeffs:
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {_num(abs(a))} {names[j]}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(model: LinearModel) -> str:
    """Render ``model`` in CPLEX LP file format."""
    names = [_name(v.name) for v in model.variables]
    lines = ["Minimize" if model.sense is Sense.MINIMIZE else "Maximize"]
    obj = sorted(model.objective.items())
    obj_text = _expr(obj, names) if obj else (f"0 {names[0]}" if names else "0")
    if model.objective_constant:
        obj_text += f" + {_num(model.objective_constant)}" if model.objective_constant > 0 else f" - {_num(-model.objective_constant)}"
    lines.append(f" obj: {obj_text}")
    lines.append("Subject To")
    op = {Relation.LE: "<=", Relation.GE: ">=", Relation.EQ: "="}
    for i, con in enumerate(model.constraints):
        label = _name(con.name) if con.name else f"c{i}"
        lines.append(f" {label}: {_expr(con.coeffs, names)} {op[con.relation]} {_num(con.rhs)}")
    lines.append("Bounds")
    for v, nm in zip(model.variables, names):
        if v.is_binary:
            continue
        lo = "-inf" if v.lb == -math.inf else _num(v.lb)
        hi = "+inf" if v.ub == math.inf else _num(v.ub)
        if v.lb == v.ub:
            lines.append(f" {nm} = {lo}")
        else:
            lines.append(f" {lo} <= {nm} <= {hi}")
    binaries = [nm for v, nm in zip(model.variables, names) if v.is_binary]
    generals = [nm for v, nm in zip(model.variables, names) if v.integer and not v.is_binary]
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {nm}" for nm in binaries)
    if generals:
        lines.append("Generals")
        lines.extend(f" {nm}" for nm in generals)
    lines.append("End")
    return "\n".join(lines) + "\n"
