from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relscen.core import (
    Graph,
    GraphKind,
    InstanceFormatError,
    ProblemKind,
    TwoStageInstance,
    instance_to_dict,
    read_instance,
    validate_graph,
    validate_instance,
    write_instance,
)
from relscen.pipeline import GeneratorParams, generate_instance


def test_complete_graph_has_every_ordered_pair():
    g = Graph.complete(6)
    assert g.arc_count == 30
    assert len(set(g.arcs)) == 30
    assert validate_graph(g) == []


def test_layered_graph_structure():
    g = Graph.layered(2, 3)
    assert g.node_count == 8
    assert g.arc_count == 3 + 9 + 3
    assert list(g.arcs) == sorted(g.arcs)
    assert validate_graph(g) == []


def test_valid_tsp_instance_has_no_violations():
    inst = generate_instance(GeneratorParams("TSP", 6, m=4, seed=1))
    assert validate_instance(inst) == []


def test_scenario_width_mismatch_is_reported():
    inst = generate_instance(GeneratorParams("SP", 2, m=3, seed=1))
    bad = TwoStageInstance("bad", ProblemKind.SP, inst.graph, inst.first_stage_costs, inst.scenarios[:, :-1])
    problems = validate_instance(bad)
    assert len(problems) == 1
    assert "scenario width mismatch" in problems[0]


def test_missing_sink_is_reported():
    g = Graph.layered(1, 2)
    broken = Graph(g.node_count, g.arcs, GraphKind.LAYERED_DAG, source=0, sink=None, layer_width=2, layer_count=1)
    problems = validate_graph(broken)
    assert problems == ["sink required"] or (len(problems) == 1 and "sink required" in problems[0])


def test_non_finite_costs_are_reported():
    inst = generate_instance(GeneratorParams("SP", 1, m=2, seed=3))
    d = inst.scenarios.copy()
    d[0, 0] = np.nan
    assert validate_instance(inst.with_scenarios(d))


def test_round_trip_generated_sp_instance():
    inst = generate_instance(GeneratorParams("SP", 2, m=7, seed=11)).with_labels([0, 1, 0, 0, 1, 0, 0])
    again = read_instance(write_instance(inst))
    assert again == inst
    assert write_instance(again) == write_instance(inst)


def test_negative_scenario_count_is_a_parse_error():
    doc = instance_to_dict(generate_instance(GeneratorParams("SP", 1, m=2, seed=0)))
    doc["m"] = -1
    with pytest.raises(InstanceFormatError):
        read_instance(json.dumps(doc))


def test_malformed_document_names_the_path():
    doc = instance_to_dict(generate_instance(GeneratorParams("SP", 1, m=2, seed=0)))
    doc["scenarios"][1] = "oops"
    with pytest.raises(InstanceFormatError) as err:
        read_instance(json.dumps(doc))
    assert "scenarios" in str(err.value)


def test_labels_are_optional():
    doc = instance_to_dict(generate_instance(GeneratorParams("SP", 1, m=2, seed=0)))
    doc.pop("labels", None)
    assert read_instance(json.dumps(doc)).labels is None


def test_instances_are_immutable():
    inst = generate_instance(GeneratorParams("SP", 1, m=2, seed=0))
    with pytest.raises(ValueError):
        inst.scenarios[0, 0] = 1.0


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(["SP", "TSP"]),
    size=st.integers(2, 4),
    m=st.integers(1, 6),
    seed=st.integers(0, 2**31 - 1),
)
def test_round_trip_property(kind, size, m, seed):
    inst = generate_instance(GeneratorParams(kind, size, layer_width=2, m=m, seed=seed))
    assert read_instance(write_instance(inst)) == inst
    assert validate_instance(inst) == validate_instance(inst) == []
