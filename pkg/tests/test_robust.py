from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import chain_instance, random_single_stage, random_two_stage, two_path_instance
from relscen.core import SolveStatus
from relscen.milp import LinearModel, Relation
from relscen.netmodels import solve_deterministic
from relscen.pipeline import GeneratorParams, generate_instance
from relscen.robust import (
    CapacityError,
    CCGResult,
    SingleStageInstance,
    brute_force_robust,
    ccg,
    enumerate_feasible,
    pareto_minimal,
    robust_value_ro,
    route_count,
    rsrp_2ro_direct,
    rsrp_brute_force,
    rsrp_exact_2ro,
    rsrp_exact_ro,
    scenario_generation_ro,
    solve_master,
)


def selection_problem() -> SingleStageInstance:
    fs = LinearModel()
    a, b = fs.add_binary("a"), fs.add_binary("b")
    fs.add_constraint({a: 1.0, b: 1.0}, Relation.EQ, 1.0)
    return SingleStageInstance(fs, np.array([[1.0, 0.0], [0.0, 1.0]]))


def assert_trace_invariants(run: CCGResult) -> None:
    lowers = [it.lower for it in run.iterations]
    assert all(b >= a - 1e-9 for a, b in zip(lowers, lowers[1:]))
    for it in run.iterations:
        assert it.upper >= it.lower - 1e-6
    if run.converged:
        assert abs(run.upper_bound - run.lower_bound) <= 1e-6


# scenario generation, single stage


def test_scenario_generation_single_scenario():
    inst = SingleStageInstance(selection_problem().feasible_set, np.array([[3.0, 2.0]]))
    run = scenario_generation_ro(inst, [0])
    assert run.converged and len(run.iterations) == 1
    assert run.final_value == pytest.approx(2.0)


def test_scenario_generation_selection_problem():
    run = scenario_generation_ro(selection_problem(), [0])
    assert run.converged
    assert run.final_value == pytest.approx(1.0)
    assert run.generated == [1]


def test_scenario_generation_matches_enumeration():
    rng = np.random.default_rng(17)
    for _ in range(15):
        inst = random_single_stage(rng, int(rng.integers(2, 9)), int(rng.integers(1, 9)))
        run = scenario_generation_ro(inst, [int(rng.integers(inst.m))])
        assert_trace_invariants(run)
        assert run.converged
        value, _ = robust_value_ro(inst)
        assert run.final_value == pytest.approx(value, abs=1e-6)


def test_single_stage_rejects_objective_and_integers():
    fs = LinearModel()
    fs.add_binary("a", obj=1.0)
    with pytest.raises(ValueError):
        SingleStageInstance(fs, np.ones((1, 1)))
    fs = LinearModel()
    fs.add_var("a", 0.0, 2.0, integer=True)
    with pytest.raises(ValueError):
        SingleStageInstance(fs, np.ones((1, 1)))


def test_feasible_enumeration_cap():
    fs = LinearModel()
    for j in range(13):
        fs.add_binary(f"x{j}")
    with pytest.raises(CapacityError):
        enumerate_feasible(fs)
    inst = SingleStageInstance(fs, np.ones((2, 13)))
    with pytest.raises(CapacityError):
        rsrp_exact_ro(inst, 1)


# exact scenario choice, single stage


def test_rsrp_ro_selection_problem():
    inst = selection_problem()
    assert rsrp_exact_ro(inst, 1)[1] == pytest.approx(0.0)
    assert rsrp_exact_ro(inst, 2)[1] == pytest.approx(1.0)


def test_rsrp_ro_extremes():
    rng = np.random.default_rng(23)
    for _ in range(10):
        inst = random_single_stage(rng, int(rng.integers(2, 7)), int(rng.integers(1, 6)))
        X = enumerate_feasible(inst.feasible_set)
        per_scenario = (inst.scenarios @ X.T).min(axis=1)
        assert rsrp_exact_ro(inst, 1)[1] == pytest.approx(per_scenario.max(), abs=1e-6)
        assert rsrp_exact_ro(inst, inst.m)[1] == pytest.approx(robust_value_ro(inst)[0], abs=1e-6)


def test_rsrp_ro_modes_agree_and_are_monotone():
    rng = np.random.default_rng(29)
    for _ in range(10):
        inst = random_single_stage(rng, int(rng.integers(2, 9)), int(rng.integers(2, 8)))
        values = []
        for k in range(1, min(3, inst.m) + 1):
            full = rsrp_exact_ro(inst, k)
            rowgen = rsrp_exact_ro(inst, k, mode="rowgen", rng=np.random.default_rng(k))
            brute = rsrp_brute_force(inst, k)
            assert full[1] == pytest.approx(brute[1], abs=1e-6)
            assert rowgen[1] == pytest.approx(brute[1], abs=1e-6)
            assert len(full[0]) <= k
            values.append(full[1])
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_pareto_minimal_rows():
    V = np.array([[1.0, 2.0], [2.0, 3.0], [0.5, 4.0], [1.0, 2.0]])
    kept = pareto_minimal(V)
    assert sorted(map(tuple, kept)) == [(0.5, 4.0), (1.0, 2.0)]


# CCG, two stage


def test_ccg_single_scenario():
    inst = chain_instance([1.0, 2.0], [[3.0, 4.0]])
    run = ccg(inst, [0])
    assert run.converged and len(run.iterations) == 1
    assert run.lower_bound == pytest.approx(run.upper_bound) == pytest.approx(10.0)


def test_ccg_dominant_scenario():
    inst = two_path_instance([1.0, 1.0, 1.0, 1.0], [[2.0, 3.0, 2.0, 3.0], [5.0, 6.0, 5.0, 6.0]])
    first = ccg(inst, [1])
    assert first.converged and len(first.iterations) == 1
    second = ccg(inst, [0])
    assert second.converged and second.generated == [1]
    assert first.final_value == pytest.approx(second.final_value)


def test_ccg_matches_brute_force_and_keeps_invariants():
    rng = np.random.default_rng(31)
    for trial in range(5):
        inst = random_two_stage(rng, "SP", size=2, width=2, m=8)
        run = ccg(inst, [int(rng.integers(inst.m))])
        assert_trace_invariants(run)
        assert run.converged
        assert run.final_value == pytest.approx(brute_force_robust(inst)[0], abs=1e-6)
        # restarting from the collected set needs no new scenario
        again = ccg(inst, run.scenario_set)
        assert again.converged and len(again.iterations) == 1


def test_ccg_start_validation():
    inst = chain_instance([1.0, 1.0], [[1.0, 1.0]])
    for bad in ([], [3], [0, 0]):
        with pytest.raises(ValueError):
            ccg(inst, bad)


def test_ccg_result_json_round_trip():
    inst = generate_instance(GeneratorParams("SP", 2, layer_width=2, m=6, seed=1))
    run = ccg(inst, [0])
    back = CCGResult.from_dict(run.to_dict())
    assert back.to_dict() == run.to_dict()
    assert back.final_value == run.final_value


def test_ccg_time_limit_keeps_valid_bounds():
    inst = generate_instance(GeneratorParams("TSP", 6, m=20, seed=3))
    run = ccg(inst, [0], deadline=0.05, backend="native")
    assert_trace_invariants(run)
    if not run.converged:
        assert run.status is SolveStatus.TIME_LIMIT
    assert run.lower_bound <= ccg(inst, [0], backend="routes").final_value + 1e-6


def test_master_is_monotone_in_the_scenario_set():
    inst = generate_instance(GeneratorParams("SP", 2, layer_width=3, m=10, seed=8))
    rng = np.random.default_rng(8)
    for _ in range(8):
        S = list(rng.choice(10, 5, replace=False))
        sub = S[: int(rng.integers(1, 5))]
        assert solve_master(inst, S).value >= solve_master(inst, sub).value - 1e-6


def test_empty_master_buys_only_negative_arcs():
    inst = chain_instance([-2.0, 3.0], [[1.0, 1.0]])
    res = solve_master(inst, [])
    assert res.value == pytest.approx(-2.0)
    assert list(res.x) == [1, 0]


# exact scenario choice, two stage


def test_rsrp_2ro_full_set_is_robust_optimum():
    inst = generate_instance(GeneratorParams("SP", 2, layer_width=2, m=5, seed=4))
    assert rsrp_exact_2ro(inst, 5)[1] == pytest.approx(brute_force_robust(inst)[0], abs=1e-6)


def test_rsrp_2ro_methods_agree():
    rng = np.random.default_rng(37)
    for _ in range(4):
        inst = random_two_stage(rng, "SP", size=2, width=2, m=5)
        vals = []
        for k in (1, 2, 3):
            enum = rsrp_exact_2ro(inst, k)
            direct = rsrp_2ro_direct(inst, k)
            brute = rsrp_brute_force(inst, k)
            assert enum[1] == pytest.approx(brute[1], abs=1e-6)
            assert direct[1] == pytest.approx(brute[1], abs=1e-6)
            best = max(solve_master(inst, s).value for s in itertools.combinations(range(5), k))
            assert brute[1] == pytest.approx(best, abs=1e-6)
            vals.append(enum[1])
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_rsrp_brute_force_breaks_ties_lexicographically():
    inst = chain_instance([1.0, 1.0], [[2.0, 2.0], [2.0, 2.0], [1.0, 1.0]])
    assert rsrp_brute_force(inst, 1)[0] == [0]


def test_rsrp_dominated_scenario_does_not_bind():
    inst = two_path_instance([1.0, 1.0, 1.0, 1.0], [[2.0, 9.0, 2.0, 9.0], [9.0, 2.0, 9.0, 2.0], [1.0, 1.0, 1.0, 1.0]])
    assert rsrp_brute_force(inst, 2)[1] == pytest.approx(rsrp_brute_force(inst, 3)[1])


def test_rsrp_rejects_bad_k_and_large_families():
    inst = chain_instance([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0]])
    for k in (0, 3):
        with pytest.raises(ValueError):
            rsrp_brute_force(inst, k)
    big = generate_instance(GeneratorParams("SP", 1, layer_width=2, m=60, seed=0))
    with pytest.raises(CapacityError):
        rsrp_exact_2ro(big, 5)


def test_brute_force_uses_deterministic_solution_for_one_scenario():
    inst = generate_instance(GeneratorParams("SP", 2, layer_width=2, m=4, seed=2))
    for i in range(4):
        assert brute_force_robust(inst, [i])[0] == pytest.approx(solve_deterministic(inst, inst.scenarios[i]).value)


# route-union master


@pytest.mark.parametrize("kind,size,width", [("SP", 2, 3), ("SP", 3, 2), ("TSP", 5, 0), ("TSP", 6, 0)])
def test_route_master_matches_milp(kind, size, width):
    inst = generate_instance(GeneratorParams(kind, size, layer_width=max(width, 1), m=12, seed=size))
    rng = np.random.default_rng(size)
    for _ in range(4):
        I = list(rng.choice(12, int(rng.integers(2, 6)), replace=False))
        a = solve_master(inst, I, backend="routes")
        b = solve_master(inst, I, backend="highs")
        assert a.status is SolveStatus.OPTIMAL
        assert a.value == pytest.approx(b.value, abs=1e-5)
        assert a.value == pytest.approx(float(inst.first_stage_costs @ a.x) + _worst(inst, a.x, I), abs=1e-9)


def _worst(inst, x, I):
    from relscen.netmodels import second_stage_values

    return float(second_stage_values(inst, x, I).max())


def test_route_master_with_negative_first_stage_costs():
    rng = np.random.default_rng(41)
    inst = random_two_stage(rng, "SP", size=2, width=2, m=5)
    c = inst.first_stage_costs.copy()
    c[:3] = -1.5
    from relscen.core import TwoStageInstance

    neg = TwoStageInstance("neg", inst.problem_kind, inst.graph, c, inst.scenarios)
    for I in ([0, 1], [2, 3, 4], list(range(5))):
        assert solve_master(neg, I, backend="routes").value == pytest.approx(solve_master(neg, I).value, abs=1e-6)


def test_route_count():
    assert route_count(generate_instance(GeneratorParams("SP", 3, layer_width=4, m=1, seed=0))) == 64
    assert route_count(generate_instance(GeneratorParams("TSP", 5, m=1, seed=0))) == 24


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(1, 6))
def test_route_master_monotone_property(seed, k):
    inst = generate_instance(GeneratorParams("SP", 2, layer_width=3, m=8, seed=seed))
    rng = np.random.default_rng(seed)
    S = list(rng.choice(8, k, replace=False))
    full = solve_master(inst, S, backend="routes").value
    assert full <= brute_force_robust(inst)[0] + 1e-6
    if k > 1:
        assert solve_master(inst, S[:-1], backend="routes").value <= full + 1e-9
    assert math.isfinite(full)
