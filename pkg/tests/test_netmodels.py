from __future__ import annotations

import math

import numpy as np
import pytest

from _support import chain_instance, random_two_stage, x_enumeration_master
from relscen.core import SolveStatus
from relscen.milp import solve_milp
from relscen.netmodels import (
    adversarial,
    encode_deterministic,
    encode_master,
    enumerate_tours,
    held_karp,
    label_correcting,
    second_stage_value,
    second_stage_values,
    solve_deterministic,
)
from relscen.pipeline import GeneratorParams, generate_instance


def test_chain_master_buys_both_arcs():
    inst = chain_instance([2.0, 3.0], [[4.0, 5.0]])
    mm = encode_master(inst, [0])
    sol = solve_milp(mm.model)
    assert sol.objective == pytest.approx(2 + 3 + 4 + 5)
    assert list(mm.x_vector(sol.values, inst.graph.arcs)) == [1, 1]


def test_tsp_master_variable_count():
    inst = generate_instance(GeneratorParams("TSP", 6, m=3, seed=0))
    mm = encode_master(inst, [0, 2])
    assert mm.model.num_vars == 30 + 2 * 30 + 2 * 5 + 1
    assert mm.mu_index is not None
    assert len(mm.x_indices) == 30


def test_master_rejects_bad_index_sets():
    inst = chain_instance([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0]])
    for bad in ([], [0, 0], [2], [-1]):
        with pytest.raises(ValueError):
            encode_master(inst, bad)


def test_mtz_order_variables_stay_out_of_objective():
    inst = generate_instance(GeneratorParams("TSP", 5, m=2, seed=4))
    mm = encode_master(inst, [0, 1])
    order_vars = set(mm.order_indices.values())
    assert order_vars and not order_vars & set(mm.model.objective)
    sp = generate_instance(GeneratorParams("SP", 2, layer_width=2, m=2, seed=4))
    assert not encode_master(sp, [0, 1]).order_indices


@pytest.mark.parametrize("kind,size", [("SP", 2), ("TSP", 5)])
def test_single_scenario_master_equals_deterministic_model(kind, size):
    inst = generate_instance(GeneratorParams(kind, size, layer_width=3, m=3, seed=2))
    for i in range(inst.m):
        master = solve_milp(encode_master(inst, [i]).model).objective
        det = solve_milp(encode_deterministic(inst, i).model).objective
        assert master == pytest.approx(det, abs=1e-6)
        assert solve_deterministic(inst, inst.scenarios[i]).value == pytest.approx(det, abs=1e-6)


def test_deterministic_tsp_is_held_karp_on_summed_costs():
    inst = generate_instance(GeneratorParams("TSP", 6, m=2, seed=9))
    for i in range(inst.m):
        hk, _ = held_karp(inst.graph, inst.first_stage_costs + inst.scenarios[i])
        assert solve_milp(encode_deterministic(inst, i).model).objective == pytest.approx(hk, abs=1e-6)


def test_second_stage_chain():
    inst = chain_instance([1.0, 1.0], [[1.0, 2.0]])
    assert second_stage_value(inst, [1, 1], 0) == pytest.approx(3.0)
    assert second_stage_value(inst, [0, 1], 0) == math.inf


def test_held_karp_matches_tour_enumeration():
    rng = np.random.default_rng(0)
    inst = generate_instance(GeneratorParams("TSP", 5, m=6, seed=1))
    tours = enumerate_tours(inst.graph)
    assert len(tours) == 24
    for i in range(inst.m):
        ref = min(inst.scenarios[i, t].sum() for t in tours)
        assert second_stage_value(inst, np.ones(inst.q), i) == pytest.approx(ref)
    x = (rng.random(inst.q) < 0.7).astype(int)
    usable = [t for t in tours if x[t].all()]
    for i in range(inst.m):
        ref = min((inst.scenarios[i, t].sum() for t in usable), default=math.inf)
        assert second_stage_value(inst, x, i) == pytest.approx(ref)


def test_label_correcting_matches_dag_batch():
    inst = generate_instance(GeneratorParams("SP", 3, layer_width=3, m=8, seed=5))
    rng = np.random.default_rng(5)
    for _ in range(10):
        x = (rng.random(inst.q) < 0.6).astype(int)
        batch = second_stage_values(inst, x)
        for i in range(inst.m):
            single, _ = label_correcting(inst.graph, inst.scenarios[i], x.astype(bool))
            assert batch[i] == pytest.approx(single)


def test_adversarial_dominance_and_loop_oracle():
    inst = chain_instance([1.0, 1.0], [[1.0, 1.0], [2.0, 3.0]])
    assert adversarial(inst, [1, 1]) == (1, pytest.approx(5.0))
    single = chain_instance([1.0, 1.0], [[4.0, 1.0]])
    assert adversarial(single, [1, 1]) == (0, pytest.approx(second_stage_value(single, [1, 1], 0)))
    sp = generate_instance(GeneratorParams("SP", 2, m=10, seed=3))
    x = np.ones(sp.q, dtype=int)
    vals = [second_stage_value(sp, x, i) for i in range(sp.m)]
    idx, val = adversarial(sp, x)
    assert idx == int(np.argmax(vals)) and val == pytest.approx(max(vals))


def test_adversarial_reports_infeasible_first_stage():
    inst = chain_instance([1.0, 1.0], [[1.0, 1.0]])
    assert adversarial(inst, [1, 0])[1] == math.inf


def test_adversarial_ties_take_lowest_index():
    inst = chain_instance([1.0, 1.0], [[1.0, 2.0], [2.0, 1.0], [0.5, 0.5]])
    assert adversarial(inst, [1, 1])[0] == 0


def test_second_stage_is_monotone_in_bought_arcs():
    inst = generate_instance(GeneratorParams("SP", 2, layer_width=3, m=5, seed=6))
    rng = np.random.default_rng(6)
    for _ in range(20):
        x = rng.random(inst.q) < 0.5
        more = x | (rng.random(inst.q) < 0.3)
        assert np.all(second_stage_values(inst, more) <= second_stage_values(inst, x))


def test_master_equals_x_enumeration_on_small_graphs():
    rng = np.random.default_rng(12)
    for trial in range(6):
        inst = random_two_stage(rng, "SP", size=2, width=2, m=4)  # 8 arcs
        I = list(rng.choice(4, int(rng.integers(1, 5)), replace=False))
        sol = solve_milp(encode_master(inst, I).model)
        assert sol.status is SolveStatus.OPTIMAL
        assert sol.objective == pytest.approx(x_enumeration_master(inst, I), abs=1e-6)
