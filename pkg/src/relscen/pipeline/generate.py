from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import Graph, ProblemKind, TwoStageInstance

FIRST_STAGE_RANGE = {ProblemKind.TSP: (4.0, 6.0), ProblemKind.SP: (5.0, 15.0)}
MODES_RANGE = (3, 8)
MIDPOINT_RANGE = (25.0, 75.0)
DEVIATION_RANGE = (0.1, 0.5)


@dataclass(frozen=True)
class GeneratorParams:
    problem_kind: ProblemKind
    size: int  # TSP node count or SP layer count
    layer_width: int = 5
    m: int = 500
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "problem_kind", ProblemKind(self.problem_kind))
        if self.size < (2 if self.problem_kind is ProblemKind.TSP else 1):
            raise ValueError(f"size too small: {self.size}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.layer_width < 1:
            raise ValueError("layer_width must be >= 1")


def generate_instance(
    params: GeneratorParams, rng: Optional[np.random.Generator] = None, instance_id: Optional[str] = None
) -> TwoStageInstance:
    """Random instance with multi-modal second-stage costs.

    Each scenario picks one of K modes; a mode has a per-arc midpoint and a
    relative deviation, and arc costs are uniform within midpoint*(1 +/- dev).
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)
    kind = params.problem_kind
    if kind is ProblemKind.TSP:
        graph = Graph.complete(params.size)
    else:
        graph = Graph.layered(params.size, params.layer_width)
    q = graph.arc_count
    c = rng.uniform(*FIRST_STAGE_RANGE[kind], size=q)
    K = int(rng.integers(MODES_RANGE[0], MODES_RANGE[1] + 1))
    mid = rng.uniform(*MIDPOINT_RANGE, size=(K, q))
    dev = rng.uniform(*DEVIATION_RANGE, size=(K, q))
    modes = rng.integers(0, K, size=params.m)
    lo = (1.0 - dev[modes]) * mid[modes]
    hi = (1.0 + dev[modes]) * mid[modes]
    scenarios = rng.uniform(lo, hi)
    if instance_id is None:
        tag = "tsp" if kind is ProblemKind.TSP else "sp"
        instance_id = f"{tag}{params.size}-m{params.m}-s{params.seed}"
    return TwoStageInstance(instance_id, kind, graph, c, scenarios)
