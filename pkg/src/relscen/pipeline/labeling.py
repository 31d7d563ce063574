"""Relevance labels for the scenarios of a training instance."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import TwoStageInstance
from ..robust import CCGResult, ccg, rsrp_brute_force, solve_master

REMOVAL_TOL = 1e-6


@dataclass
class LabelReport:
    labels: np.ndarray  # int8, one per scenario
    collected: list[int]  # start scenario followed by generated ones
    full_value: float  # master value over all collected scenarios
    removal_values: dict[int, float] = field(default_factory=dict)
    ccg: Optional[CCGResult] = None


def label_instance(
    instance: TwoStageInstance,
    deadline: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
    backend: Optional[str] = "auto",
    start: Optional[int] = None,
) -> LabelReport:
    """Label collected scenarios whose removal lowers the master value.

    CCG runs from one random scenario (or ``start``) within ``deadline``
    seconds. Every scenario it collected is then dropped in turn, against the
    full collected set, and is relevant when the master value falls by more
    than the tolerance. Scenarios never collected are irrelevant.
    """
    rng = rng if rng is not None else np.random.default_rng()
    first = int(rng.integers(instance.m)) if start is None else int(start)
    run = ccg(instance, [first], deadline=deadline, backend=backend)
    collected = list(run.scenario_set)
    full = solve_master(instance, collected, backend=backend).value
    labels = np.zeros(instance.m, dtype=np.int8)
    removal: dict[int, float] = {}
    for i in collected:
        rest = [j for j in collected if j != i]
        value = solve_master(instance, rest, backend=backend).value
        # fewer scenarios can never raise the master value
        assert value <= full + REMOVAL_TOL * max(1.0, abs(full)), (value, full)
        removal[i] = value
        if value < full - REMOVAL_TOL:
            labels[i] = 1
    return LabelReport(labels, collected, full, removal, run)


def label_via_rsrp(instance: TwoStageInstance, tol: float = REMOVAL_TOL) -> np.ndarray:
    """Label the best size-k scenario set for the smallest k that reaches the robust optimum.

    Uses exhaustive subset search, so it is only meant for tiny instances.
    """
    _, target = rsrp_brute_force(instance, instance.m)
    labels = np.zeros(instance.m, dtype=np.int8)
    for k in range(1, instance.m + 1):
        chosen, value = rsrp_brute_force(instance, k)
        if value >= target - tol * max(1.0, abs(target)):
            labels[chosen] = 1
            return labels
    raise AssertionError("unreachable: k = m always attains the robust optimum")
