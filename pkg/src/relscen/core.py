"""Instances, graphs and solutions, plus their JSON file representation."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np


class GraphKind(str, enum.Enum):
    COMPLETE_DIRECTED = "CompleteDirected"
    LAYERED_DAG = "LayeredDAG"


class ProblemKind(str, enum.Enum):
    TSP = "TSP"
    SP = "SP"


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"
    # numerical breakdown or iteration cap; never reported as Optimal
    ERROR = "Error"


class InstanceFormatError(ValueError):
    """Raised when an instance document does not match the expected schema."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Graph:
    node_count: int
    arcs: tuple[tuple[int, int], ...]
    kind: GraphKind
    source: Optional[int] = None
    sink: Optional[int] = None
    layer_width: Optional[int] = None
    layer_count: Optional[int] = None

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    def arc_index(self) -> dict[tuple[int, int], int]:
        return {a: e for e, a in enumerate(self.arcs)}

    @classmethod
    def complete(cls, node_count: int) -> "Graph":
        arcs = tuple(
            (i, j) for i in range(node_count) for j in range(node_count) if i != j
        )
        return cls(node_count, arcs, GraphKind.COMPLETE_DIRECTED)

    @classmethod
    def layered(cls, layer_count: int, layer_width: int) -> "Graph":
        """Source 0, layer l (1-based) holds nodes 1+(l-1)*w .. l*w, sink last."""
        n = layer_count * layer_width + 2
        sink = n - 1

        def layer(l: int) -> range:
            return range(1 + (l - 1) * layer_width, 1 + l * layer_width)

        arcs = [(0, v) for v in layer(1)]
        for l in range(1, layer_count):
            arcs.extend((a, b) for a in layer(l) for b in layer(l + 1))
        arcs.extend((v, sink) for v in layer(layer_count))
        return cls(
            n,
            tuple(sorted(arcs)),
            GraphKind.LAYERED_DAG,
            source=0,
            sink=sink,
            layer_width=layer_width,
            layer_count=layer_count,
        )


@dataclass(frozen=True, eq=False)
class TwoStageInstance:
    id: str
    problem_kind: ProblemKind
    graph: Graph
    first_stage_costs: np.ndarray
    scenarios: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        c = np.array(self.first_stage_costs, dtype=np.float64)
        d = np.array(self.scenarios, dtype=np.float64)
        if d.ndim == 1:
            d = d.reshape(1, -1)
        c.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "first_stage_costs", c)
        object.__setattr__(self, "scenarios", d)
        if self.labels is not None:
            lab = np.array(self.labels, dtype=np.int8)
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def m(self) -> int:
        return self.scenarios.shape[0]

    @property
    def q(self) -> int:
        return self.scenarios.shape[1]

    @property
    def center(self) -> np.ndarray:
        return self.scenarios.mean(axis=0)

    def with_labels(self, labels: Optional[Sequence[int]]) -> "TwoStageInstance":
        return TwoStageInstance(
            self.id,
            self.problem_kind,
            self.graph,
            self.first_stage_costs,
            self.scenarios,
            None if labels is None else np.asarray(labels, dtype=np.int8),
        )

    def with_scenarios(self, scenarios: np.ndarray) -> "TwoStageInstance":
        return TwoStageInstance(
            self.id, self.problem_kind, self.graph, self.first_stage_costs, scenarios
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TwoStageInstance):
            return NotImplemented
        if (self.labels is None) != (other.labels is None):
            return False
        return (
            self.id == other.id
            and self.problem_kind == other.problem_kind
            and self.graph == other.graph
            and np.array_equal(self.first_stage_costs, other.first_stage_costs)
            and np.array_equal(self.scenarios, other.scenarios)
            and (self.labels is None or np.array_equal(self.labels, other.labels))
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass
class Solution:
    status: SolveStatus
    objective: float = math.nan
    best_bound: float = math.nan
    values: Optional[np.ndarray] = None
    nodes: int = 0
    iterations: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def has_values(self) -> bool:
        return self.values is not None

    @property
    def lower_bound(self) -> float:
        """Objective when optimal, best bound otherwise (minimization reading)."""
        if self.status is SolveStatus.OPTIMAL:
            return self.objective
        return self.best_bound


def validate_graph(graph: Graph) -> list[str]:
    out: list[str] = []
    n = graph.node_count
    if not isinstance(n, int) or n < 1:
        out.append("graph.node_count: must be a positive integer")
        return out
    seen: set[tuple[int, int]] = set()
    for t, h in graph.arcs:
        if not (0 <= t < n and 0 <= h < n):
            out.append(f"graph.arcs: arc ({t},{h}) has endpoint outside [0,{n})")
        if t == h:
            out.append(f"graph.arcs: self-loop at node {t}")
        if (t, h) in seen:
            out.append(f"graph.arcs: duplicate arc ({t},{h})")
        seen.add((t, h))
    if list(graph.arcs) != sorted(graph.arcs):
        out.append("graph.arcs: arcs not in lexicographic order")

    if graph.kind is GraphKind.COMPLETE_DIRECTED:
        if len(seen) != n * (n - 1) or len(graph.arcs) != n * (n - 1):
            out.append("graph.arcs: complete digraph needs every ordered pair exactly once")
    elif graph.kind is GraphKind.LAYERED_DAG:
        if graph.source is None:
            out.append("graph.source: source required")
        if graph.sink is None:
            out.append("graph.sink: sink required")
        if graph.layer_width is None or graph.layer_width < 1:
            out.append("graph.layer_width: positive layer width required")
        if graph.layer_count is None or graph.layer_count < 1:
            out.append("graph.layer_count: positive layer count required")
        if not out:
            expected = Graph.layered(graph.layer_count, graph.layer_width)
            if (
                expected.node_count != n
                or expected.source != graph.source
                or expected.sink != graph.sink
                or set(expected.arcs) != seen
            ):
                out.append("graph.arcs: arcs do not form the layered source/sink DAG")
    return out


def validate_instance(instance: TwoStageInstance) -> list[str]:
    """List every violated invariant; an empty list means the instance is valid."""
    out = validate_graph(instance.graph)
    q = instance.graph.arc_count
    c = instance.first_stage_costs
    d = instance.scenarios
    if c.ndim != 1 or c.shape[0] != q:
        out.append(f"c: first-stage cost length {c.shape[0] if c.ndim else 0} != arc count {q}")
    if d.ndim != 2 or d.shape[1] != q:
        width = d.shape[1] if d.ndim == 2 else 0
        out.append(f"scenarios: scenario width mismatch ({width} != arc count {q})")
    if d.shape[0] < 1:
        out.append("scenarios: at least one scenario required")
    if not np.all(np.isfinite(c)):
        out.append("c: costs must be finite")
    if not np.all(np.isfinite(d)):
        out.append("scenarios: costs must be finite")
    expected_kind = {
        ProblemKind.TSP: GraphKind.COMPLETE_DIRECTED,
        ProblemKind.SP: GraphKind.LAYERED_DAG,
    }[instance.problem_kind]
    if instance.graph.kind is not expected_kind:
        out.append(f"problem_kind: {instance.problem_kind.value} requires a {expected_kind.value} graph")
    if instance.labels is not None:
        lab = instance.labels
        if lab.shape != (d.shape[0],):
            out.append(f"labels: length {lab.shape[0] if lab.ndim else 0} != scenario count {d.shape[0]}")
        elif not np.all((lab == 0) | (lab == 1)):
            out.append("labels: entries must be 0 or 1")
    return out


# --- JSON --------------------------------------------------------------------


def instance_to_dict(instance: TwoStageInstance) -> dict[str, Any]:
    g = instance.graph
    graph: dict[str, Any] = {
        "node_count": g.node_count,
        "kind": g.kind.value,
        "arcs": [[t, h] for t, h in g.arcs],
    }
    for key in ("source", "sink", "layer_width", "layer_count"):
        val = getattr(g, key)
        if val is not None:
            graph[key] = val
    doc: dict[str, Any] = {
        "id": instance.id,
        "problem_kind": instance.problem_kind.value,
        "graph": graph,
        "c": [float(v) for v in instance.first_stage_costs],
        "m": instance.m,
        "scenarios": [[float(v) for v in row] for row in instance.scenarios],
    }
    if instance.labels is not None:
        doc["labels"] = [int(v) for v in instance.labels]
    return doc


def write_instance(instance: TwoStageInstance) -> bytes:
    # json writes floats with repr(), which round-trips float64 exactly
    return json.dumps(instance_to_dict(instance), separators=(",", ":")).encode("utf-8")


def _require(doc: dict, key: str, path: str) -> Any:
    if not isinstance(doc, dict):
        raise InstanceFormatError(path, "expected an object")
    if key not in doc:
        raise InstanceFormatError(f"{path}.{key}", "missing required field")
    return doc[key]


def _int(value: Any, path: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(path, "expected an integer")
    if value < minimum:
        raise InstanceFormatError(path, f"must be >= {minimum}")
    return value


def _real_list(value: Any, path: str) -> list[float]:
    if not isinstance(value, list):
        raise InstanceFormatError(path, "expected an array")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InstanceFormatError(f"{path}[{i}]", "expected a number")
        if not math.isfinite(v):
            raise InstanceFormatError(f"{path}[{i}]", "must be finite")
        out.append(float(v))
    return out


def instance_from_dict(doc: Any) -> TwoStageInstance:
    root = "$"
    iid = _require(doc, "id", root)
    if not isinstance(iid, str):
        raise InstanceFormatError("$.id", "expected a string")
    try:
        kind = ProblemKind(_require(doc, "problem_kind", root))
    except ValueError:
        raise InstanceFormatError("$.problem_kind", "expected 'TSP' or 'SP'") from None

    g = _require(doc, "graph", root)
    node_count = _int(_require(g, "node_count", "$.graph"), "$.graph.node_count", 1)
    try:
        gkind = GraphKind(_require(g, "kind", "$.graph"))
    except ValueError:
        raise InstanceFormatError("$.graph.kind", "unknown graph kind") from None
    raw_arcs = _require(g, "arcs", "$.graph")
    if not isinstance(raw_arcs, list):
        raise InstanceFormatError("$.graph.arcs", "expected an array")
    arcs = []
    for e, a in enumerate(raw_arcs):
        p = f"$.graph.arcs[{e}]"
        if not isinstance(a, list) or len(a) != 2:
            raise InstanceFormatError(p, "expected a [tail, head] pair")
        arcs.append((_int(a[0], p + "[0]"), _int(a[1], p + "[1]")))
    opt = {}
    for key in ("source", "sink", "layer_width", "layer_count"):
        if key in g and g[key] is not None:
            opt[key] = _int(g[key], f"$.graph.{key}", 1 if key.startswith("layer") else 0)
    graph = Graph(node_count, tuple(arcs), gkind, **opt)

    c = _real_list(_require(doc, "c", root), "$.c")
    raw_sc = _require(doc, "scenarios", root)
    if not isinstance(raw_sc, list) or not raw_sc:
        raise InstanceFormatError("$.scenarios", "expected a non-empty array of scenarios")
    rows = [_real_list(r, f"$.scenarios[{i}]") for i, r in enumerate(raw_sc)]
    width = len(c)
    for i, r in enumerate(rows):
        if len(r) != width:
            raise InstanceFormatError(f"$.scenarios[{i}]", f"scenario width mismatch ({len(r)} != {width})")
    if doc.get("m") is not None:
        # optional redundant count, checked against the rows when present
        if _int(doc["m"], "$.m", 1) != len(rows):
            raise InstanceFormatError("$.m", f"says {doc['m']} scenarios but {len(rows)} are given")
    labels = None
    if doc.get("labels") is not None:
        raw_lab = doc["labels"]
        if not isinstance(raw_lab, list) or len(raw_lab) != len(rows):
            raise InstanceFormatError("$.labels", "expected one 0/1 entry per scenario")
        for i, v in enumerate(raw_lab):
            if v not in (0, 1) or isinstance(v, bool):
                raise InstanceFormatError(f"$.labels[{i}]", "expected 0 or 1")
        labels = np.asarray(raw_lab, dtype=np.int8)
    return TwoStageInstance(
        iid, kind, graph, np.asarray(c), np.asarray(rows, dtype=np.float64).reshape(len(rows), width), labels
    )


def read_instance(data: bytes | str) -> TwoStageInstance:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError("$", f"invalid JSON ({exc.msg})") from None
    return instance_from_dict(doc)


def load_instance(path) -> TwoStageInstance:
    with open(path, "rb") as fh:
        return read_instance(fh.read())


def save_instance(instance: TwoStageInstance, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_instance(instance))
