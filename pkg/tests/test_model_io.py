"""Model documents: parsing, validation, serialization, compilation."""

import yaml
import pytest

from beliefplan.decision import payoff_from_costs
from beliefplan.errors import ModelError
from beliefplan.frames import Domain, Variable
from beliefplan.mass import ConditionalBelief, MassFunction, balloon
from beliefplan.model_io import (
    FocalSpec,
    bundled_model_path,
    compile_network,
    load_model,
    parse_model,
    serialize_model,
)
from beliefplan.propagation import build_join_tree, propagate


@pytest.fixture(scope="module")
def minimal_doc():
    return load_model(bundled_model_path("minimal"))


@pytest.fixture(scope="module")
def waste_doc():
    return load_model(bundled_model_path("waste_disposal"))


def base_doc() -> dict:
    """A small valid document as plain data, for mutation in error tests."""
    return {
        "tests": [{"id": "t1", "cost": 1}],
        "symptoms": [{"id": "s1"}],
        "diagnosis": {"id": "d", "frame": ["x", "y"]},
        "treatments": ["act", "wait"],
        "utility": {"act": {"x": -1, "y": -2}, "wait": {"x": -3, "y": 0}},
        "rules": [
            {
                "kind": "conditional",
                "id": "r1",
                "condition": {"variable": "d", "value": "x"},
                "target": ["t1"],
                "masses": [
                    {"set": ["+"], "mass": 0.8},
                    {"set": ["+", "-"], "mass": 0.2},
                ],
            }
        ],
    }


def parse(data: dict):
    return parse_model(yaml.safe_dump(data, sort_keys=False))


def errors_of(data: dict) -> str:
    with pytest.raises(ModelError) as exc:
        parse(data)
    return str(exc.value)


# -- bundled documents ------------------------------------------------------

def test_minimal_document_shape(minimal_doc):
    doc = minimal_doc
    (test,) = doc.tests
    assert (test.id, test.cost, test.frame) == ("leak-test", 1.0, ("+", "-"))
    assert doc.symptoms == ()
    assert doc.diagnosis.id == "diagnosis"
    assert doc.diagnosis.frame == ("present", "absent")
    assert doc.treatments == ("repair", "ignore")
    assert doc.utility == {
        "repair": {"present": -20.0, "absent": -20.0},
        "ignore": {"present": -100.0, "absent": 0.0},
    }
    assert doc.prior is None
    (rule,) = doc.rules
    assert rule.kind == "conditional"
    assert rule.condition_variable == "diagnosis"
    assert rule.condition_value == "present"
    assert rule.domain == ("leak-test",)
    assert rule.masses == (
        FocalSpec((("+",),), 0.8),
        FocalSpec((("+",), ("-",)), 0.2),
    )


def test_waste_document_counts(waste_doc):
    doc = waste_doc
    assert len(doc.tests) == 21
    assert len(doc.symptoms) == 11
    assert doc.diagnosis.frame == ("a", "b", "c", "d", "e", "f", "g", "omega")
    assert len(doc.treatments) == 8
    assert len(doc.rules) == 43
    assert doc.prior is None
    # defaulted frames everywhere
    assert all(t.frame == ("+", "-") for t in doc.tests)
    assert all(s.frame == ("yes", "no") for s in doc.symptoms)


def test_waste_test_costs(waste_doc):
    costs = {t.id: t.cost for t in waste_doc.tests}
    assert costs["test-1"] == 1
    assert costs["test-11"] == 2
    assert costs["test-15"] == 5
    assert costs["test-16"] == 7
    assert costs["test-18"] == 2
    assert costs["test-21"] == 4


def test_waste_utility_matches_cost_decomposition(waste_doc):
    """Every payoff cell decomposes as action cost plus delay-if-wrong."""
    dig = {"a": 50, "b": 60, "c": 60, "d": 10, "e": 10, "f": 15, "g": 10}
    delay = {"a": 300, "b": 200, "c": 400, "d": 50, "e": 50, "f": 50, "g": 50, "omega": 100}
    utility = waste_doc.utility
    for site, cost in dig.items():
        for origin in waste_doc.diagnosis.frame:
            expected = payoff_from_costs(cost, delay[origin], origin == site)
            assert utility[f"dig-{site}"][origin] == expected
    for origin in waste_doc.diagnosis.frame:
        expected = 0.0 if origin == "omega" else -delay[origin]
        assert utility["noclean"][origin] == expected
    # a couple of cells pinned directly, independent of the reconstruction
    assert utility["dig-b"]["a"] == -360
    assert utility["dig-c"]["d"] == -110


# -- the YAML dialect -------------------------------------------------------

def test_yes_and_no_parse_as_labels():
    # YAML 1.1 would read the unquoted frame below as [True, False]
    text = """
tests: [{id: t1, cost: 0}]
diagnosis: {id: d, frame: [yes, no]}
treatments: [act]
utility: {act: {yes: -1, no: 0}}
"""
    doc = parse_model(text)
    assert doc.diagnosis.frame == ("yes", "no")
    assert doc.utility["act"] == {"yes": -1.0, "no": 0.0}


def test_duplicate_mapping_keys_rejected():
    text = "tests: []\ntests: []\ndiagnosis: {id: d, frame: [x, y]}\n"
    with pytest.raises(ModelError) as exc:
        parse_model(text)
    assert "duplicate mapping key" in str(exc.value)


def test_serializer_quotes_bool_like_labels(waste_doc):
    # otherwise a standard YAML 1.1 reader would see booleans on re-load
    text = serialize_model(waste_doc)
    assert "'yes'" in text
    assert yaml.safe_load(text)["symptoms"][0]["frame"] == ["yes", "no"]


def test_round_trip(minimal_doc, waste_doc):
    for doc in (minimal_doc, waste_doc):
        assert parse_model(serialize_model(doc)) == doc


# -- compilation ------------------------------------------------------------

def test_compile_minimal(minimal_doc):
    net, model = compile_network(minimal_doc)
    assert tuple(v.id for v in net.variables) == ("diagnosis", "leak-test")
    leak = Variable("leak-test", ("+", "-"))
    diag = Variable("diagnosis", ("present", "absent"))
    expected = balloon(
        ConditionalBelief(diag, "present", MassFunction(Domain((leak,)), {0b01: 0.8, 0b11: 0.2}))
    )
    assert net.relations == (expected,)
    assert model.diagnosis_id == "diagnosis"
    assert model.treatments == ("repair", "ignore")
    assert model.test_costs == {"leak-test": 1.0}


def test_compile_puts_prior_first():
    data = base_doc()
    data["prior"] = {"masses": [{"set": ["x"], "mass": 0.3}, {"set": ["x", "y"], "mass": 0.7}]}
    net, _ = compile_network(parse(data))
    assert len(net.relations) == 2
    assert net.relations[0].domain.ids == ("d",)
    assert net.relations[0].masses == {0b01: 0.3, 0b11: 0.7}


def test_compile_is_deterministic(waste_doc):
    net1, model1 = compile_network(waste_doc)
    net2, model2 = compile_network(waste_doc)
    assert net1 == net2
    assert model1 == model2
    assert model1.test_costs == {t.id: t.cost for t in waste_doc.tests}


def test_no_rules_compiles_to_vacuous_belief():
    data = base_doc()
    del data["rules"]
    net, _ = compile_network(parse(data))
    assert net.relations == ()
    assert propagate(net, ["d"])["d"].is_vacuous


def test_conditional_rule_balloons(waste_doc):
    """The compiled relation of a conditional is its ballooning extension."""
    net, _ = compile_network(waste_doc)
    idx = [r.id for r in waste_doc.rules].index("point-1-test")
    symp = Variable("symp-1", ("yes", "no"))
    t1 = Variable("test-1", ("+", "-"))
    expected = balloon(
        ConditionalBelief(symp, "yes", MassFunction(Domain((t1,)), {0b01: 0.99, 0b11: 0.01}))
    )
    assert net.relations[idx] == expected


def test_waste_join_tree_stays_small(waste_doc):
    # the whole point of the compiled shape: no clique beyond three variables
    net, _ = compile_network(waste_doc)
    tree = build_join_tree(net)
    assert max(len(c) for c in tree.cliques) == 3
    assert len(tree.cliques) == 31


def test_compile_size_bound_names_the_rule(waste_doc):
    with pytest.raises(ModelError) as exc:
        compile_network(waste_doc, size_bound=4)
    assert "reach-a-1" in str(exc.value)


def test_bundled_model_path_unknown_name():
    with pytest.raises(ModelError) as exc:
        bundled_model_path("nope")
    message = str(exc.value)
    assert "minimal" in message and "waste_disposal" in message


def test_load_model_missing_file(tmp_path):
    with pytest.raises(ModelError) as exc:
        load_model(tmp_path / "absent.yaml")
    assert "cannot read" in str(exc.value)


# -- validation -------------------------------------------------------------

def test_diagnosis_must_be_single_mapping():
    data = base_doc()
    data["diagnosis"] = [data["diagnosis"], {"id": "d2", "frame": ["x", "y"]}]
    assert "expected a single mapping" in errors_of(data)


def test_reserved_candidate_id_rejected():
    data = base_doc()
    data["tests"][0]["id"] = "no-test"
    assert "reserved" in errors_of(data)


def test_cost_required_and_nonnegative():
    data = base_doc()
    del data["tests"][0]["cost"]
    assert "cost is required" in errors_of(data)
    data = base_doc()
    data["tests"][0]["cost"] = -1
    assert "nonnegative" in errors_of(data)


def test_duplicate_variable_ids_rejected():
    data = base_doc()
    data["symptoms"].append({"id": "t1"})
    assert "declared more than once" in errors_of(data)


def test_utility_must_be_complete():
    data = base_doc()
    del data["utility"]["act"]["y"]
    assert "missing payoff for diagnosis 'y'" in errors_of(data)
    data = base_doc()
    del data["utility"]["wait"]
    assert "missing row for treatment 'wait'" in errors_of(data)


def test_rule_masses_must_sum_to_one():
    data = base_doc()
    data["rules"][0]["masses"][1]["mass"] = 0.1
    assert "masses sum to" in errors_of(data)


def test_rule_mass_range_checked():
    data = base_doc()
    data["rules"][0]["masses"] = [{"set": ["+"], "mass": 1.5}]
    assert "(0, 1]" in errors_of(data)


def test_duplicate_configurations_in_focal_set():
    data = base_doc()
    data["rules"][0]["masses"] = [{"set": ["+", "+"], "mass": 1}]
    assert "duplicate configurations" in errors_of(data)


def test_unknown_variable_in_rule():
    data = base_doc()
    data["rules"][0]["target"] = ["ghost"]
    assert "unknown variable 'ghost'" in errors_of(data)


def test_condition_variable_outside_target():
    data = base_doc()
    data["rules"][0]["target"] = ["d"]
    assert "cannot appear in the target" in errors_of(data)


def test_duplicate_rule_ids_rejected():
    data = base_doc()
    data["rules"].append(dict(data["rules"][0]))
    assert "duplicate rule id" in errors_of(data)


def test_unknown_sections_rejected():
    data = base_doc()
    data["bonus"] = {}
    assert "unknown fields" in errors_of(data)


def test_frame_labels_must_be_strings():
    data = base_doc()
    data["diagnosis"]["frame"] = ["x", 5]
    assert "labels must be non-empty strings" in errors_of(data)


def test_prior_shape_checked():
    data = base_doc()
    data["prior"] = [{"set": ["x"], "mass": 1}]
    assert "single 'masses' list" in errors_of(data)
    data["prior"] = {"masses": [{"set": ["z"], "mass": 1}]}
    assert "label 'z' not in frame" in errors_of(data)


def test_all_problems_reported_at_once():
    data = base_doc()
    data["tests"][0]["cost"] = -1
    del data["utility"]["act"]["y"]
    data["prior"] = {"masses": [{"set": ["x"], "mass": "heavy"}]}
    with pytest.raises(ModelError) as exc:
        parse(data)
    message = str(exc.value)
    assert len(exc.value.diagnostics) >= 3
    assert "tests[0].cost" in message
    assert "utility.act" in message
    assert "prior.masses[0].mass" in message
