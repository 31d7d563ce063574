from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import chain_instance
from relscen.core import ProblemKind, write_instance
from relscen.forest import ForestParams
from relscen.pipeline import (
    GeneratorParams,
    Method,
    SelectionDistribution,
    generate_instance,
    label_instance,
    label_via_rsrp,
    sample_without_replacement,
    select_scenarios,
    selection_weights,
    train_on_instances,
    training_rows,
)
from relscen.robust import solve_master


def test_generator_ranges():
    rng = np.random.default_rng(0)
    for t in range(1000):
        kind = "TSP" if t % 2 else "SP"
        size = int(rng.integers(3, 6)) if kind == "TSP" else int(rng.integers(1, 3))
        inst = generate_instance(GeneratorParams(kind, size, layer_width=2, m=int(rng.integers(1, 6)), seed=t))
        lo, hi = (4.0, 6.0) if inst.problem_kind is ProblemKind.TSP else (5.0, 15.0)
        assert np.all((inst.first_stage_costs >= lo) & (inst.first_stage_costs <= hi))
        assert np.all((inst.scenarios >= 12.5) & (inst.scenarios <= 112.5))


def test_generator_topology_and_determinism():
    p = GeneratorParams("SP", 3, m=20, seed=42)
    a, b = generate_instance(p), generate_instance(p)
    assert write_instance(a) == write_instance(b)
    assert a.graph.layer_width == 5 and a.graph.layer_count == 3
    assert a.scenarios.shape == (20, 5 + 25 + 25 + 5)
    tsp = generate_instance(GeneratorParams("TSP", 6, m=3, seed=1))
    assert tsp.q == 30
    assert GeneratorParams("SP", 2).m == 500


def test_generator_rejects_bad_params():
    with pytest.raises(ValueError):
        GeneratorParams("TSP", 1)
    with pytest.raises(ValueError):
        GeneratorParams("SP", 2, m=0)


# labeling


def test_label_single_scenario():
    inst = chain_instance([1.0, 1.0], [[2.0, 3.0]])
    assert list(label_instance(inst, rng=np.random.default_rng(0)).labels) == [1]


def test_label_dominant_scenario_alone():
    inst = generate_instance(GeneratorParams("SP", 2, layer_width=3, m=12, seed=3))
    d = inst.scenarios.copy()
    d[4] = d.max(axis=0) + 1.0
    inst = inst.with_scenarios(d)
    for seed in range(4):
        rep = label_instance(inst, rng=np.random.default_rng(seed))
        assert 4 in rep.collected
        assert list(np.flatnonzero(rep.labels)) == [4]


def test_labels_follow_removal_rule():
    inst = generate_instance(GeneratorParams("SP", 2, m=30, seed=7))
    rep = label_instance(inst, rng=np.random.default_rng(7))
    assert rep.ccg.converged
    assert rep.collected[0] == rep.ccg.start_set[0]
    assert set(np.flatnonzero(rep.labels)) <= set(rep.collected)
    for i in rep.collected:
        rest = [j for j in rep.collected if j != i]
        value = solve_master(inst, rest, backend="highs").value
        assert value <= rep.full_value + 1e-6
        assert bool(rep.labels[i]) == (value < rep.full_value - 1e-6)


def test_labels_agree_across_master_backends():
    inst = generate_instance(GeneratorParams("TSP", 5, m=15, seed=2))
    a = label_instance(inst, rng=np.random.default_rng(1), backend="auto")
    b = label_instance(inst, rng=np.random.default_rng(1), backend="native")
    assert np.array_equal(a.labels, b.labels)
    assert a.full_value == pytest.approx(b.full_value, abs=1e-6)


def test_label_under_tight_deadline_still_labels_collected_set():
    inst = generate_instance(GeneratorParams("TSP", 6, m=30, seed=5))
    rep = label_instance(inst, deadline=0.01, rng=np.random.default_rng(0), backend="native")
    assert len(rep.labels) == 30
    assert set(np.flatnonzero(rep.labels)) <= set(rep.collected)


def test_label_via_rsrp():
    inst = generate_instance(GeneratorParams("SP", 1, layer_width=2, m=5, seed=1))
    labels = label_via_rsrp(inst)
    chosen = list(np.flatnonzero(labels))
    full = solve_master(inst, range(5)).value
    assert solve_master(inst, chosen).value == pytest.approx(full, abs=1e-6)
    for j in chosen:
        fewer = [i for i in chosen if i != j]
        assert solve_master(inst, fewer).value < full - 1e-6 or not fewer


# selection


def test_squared_weight_normalization():
    assert np.allclose(SelectionDistribution(np.array([2.0, 1.0])).probabilities, [0.8, 0.2])


def test_point_mass_selection():
    inst = chain_instance([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    for seed in range(20):
        idx, fallback = sample_without_replacement(SelectionDistribution(np.array([1.0, 0.0, 0.0])).probabilities, 1, np.random.default_rng(seed))
        assert idx == [0] and not fallback
    assert inst.m == 3


def test_maxsum_distribution():
    inst = chain_instance([1.0, 1.0], [[1.0, 1.0], [3.0, 1.0]])
    w = selection_weights(Method.MAXSUM, inst)
    assert np.allclose(SelectionDistribution(w).probabilities, [0.2, 0.8])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=2, max_size=10), st.floats(0.01, 1000.0))
def test_scaling_weights_keeps_distribution(weights, scale):
    w = np.array(weights)
    assert np.allclose(SelectionDistribution(w).probabilities, SelectionDistribution(scale * w).probabilities)


def test_k1_frequencies_within_three_sigma():
    probs = SelectionDistribution(np.array([3.0, 1.0, 2.0, 0.5])).probabilities
    rng = np.random.default_rng(123)
    n = 100_000
    draws = np.array([sample_without_replacement(probs, 1, rng)[0][0] for _ in range(n)])
    counts = np.bincount(draws, minlength=4)
    sigma = np.sqrt(n * probs * (1 - probs))
    assert np.all(np.abs(counts - n * probs) <= 3 * sigma)


def test_without_replacement_renormalizes():
    probs = np.array([0.5, 0.5, 0.0])
    idx, fallback = sample_without_replacement(probs, 3, np.random.default_rng(0))
    assert sorted(idx) == [0, 1, 2] and fallback
    with pytest.raises(ValueError):
        sample_without_replacement(probs, 4, np.random.default_rng(0))


def test_all_zero_weights_fall_back_to_uniform():
    dist = SelectionDistribution(np.zeros(4))
    assert dist.uniform_fallback
    assert np.allclose(dist.probabilities, 0.25)


@pytest.fixture(scope="module")
def small_model():
    insts = []
    for s in range(4):
        inst = generate_instance(GeneratorParams("SP", 2, m=20, seed=100 + s))
        insts.append(inst.with_labels(label_instance(inst, rng=np.random.default_rng(s)).labels))
    return train_on_instances(insts, ForestParams(n_trees=10, seed=0)), insts


@pytest.mark.parametrize("method", ["DDH", "Random", "Maxsum"])
def test_selection_returns_k_distinct_indices(method, small_model):
    model, _ = small_model
    inst = generate_instance(GeneratorParams("SP", 2, m=20, seed=999))
    for k in (1, 5, 20):
        sel = select_scenarios(method, inst, k, model=model, rng=np.random.default_rng(k))
        assert len(sel.indices) == k == len(set(sel.indices))
        assert all(0 <= i < 20 for i in sel.indices)
        assert sel.method is Method.parse(method)


def test_selection_errors(small_model):
    inst = generate_instance(GeneratorParams("SP", 2, m=5, seed=1))
    with pytest.raises(ValueError):
        select_scenarios("DDH", inst, 2)
    with pytest.raises(ValueError):
        select_scenarios("Random", inst, 6)
    with pytest.raises(ValueError):
        select_scenarios("Best", inst, 1)


def test_training_rows(small_model):
    _, insts = small_model
    X, y = training_rows(insts)
    assert X.shape == (80, 26) and y.shape == (80,)
    assert np.all((X >= 0) & (X <= 1))
    with pytest.raises(ValueError):
        training_rows([generate_instance(GeneratorParams("SP", 1, m=2, seed=0))])
