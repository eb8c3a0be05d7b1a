"""Network structure: intersections, validation, and storage accounting."""

import numpy as np
import pytest

import oracles
from gbi import LegNet, compute_intersections, net_from_document, storage_footprint, validate
from gbi.net import Cutoff, Forbidden, Leg, Variable
from gbi.weather import weather_document


def evidence_vars(*ids):
    return tuple(Variable(i, i.upper(), "evidence", is_bev=True) for i in ids)


def net_of(leg_specs, relations=()):
    """LegNet from {leg_id: variable ids}; variables are declared automatically."""
    seen: list[str] = []
    for ids in leg_specs.values():
        for vid in ids:
            if vid not in seen:
                seen.append(vid)
    legs = tuple(Leg(lid, lid.upper(), ids) for lid, ids in leg_specs.items())
    return LegNet(evidence_vars(*seen), legs, relations)


# ----------------------------------------------------------- intersections


def test_intersections_of_the_weather_net():
    net = net_from_document(weather_document(), include_cmds=False)
    edges = compute_intersections(net)
    assert edges[("folk-predictions", "kind-of-precip")] == ("folk-precip",)
    assert edges[("other-predictions", "kind-of-precip")] == ("others-precip",)
    assert edges[("kind-of-precip", "expected-temperature")] == (
        "rain-temp",
        "snow-temp",
    )
    assert ("other-predictions", "folk-predictions") not in edges


def test_intersections_omit_disjoint_pairs():
    net = net_of({"a": ("x", "y"), "b": ("u", "w")})
    assert compute_intersections(net) == {}


def test_intersections_never_pair_a_leg_with_itself():
    net = net_of({"a": ("x", "y")})
    assert compute_intersections(net) == {}


def test_intersections_are_deterministic_and_ordered_by_declaration():
    net = net_of({"a": ("x", "y", "z"), "b": ("z", "y", "u")})
    first = compute_intersections(net)
    assert first == compute_intersections(net)
    # shared set follows the first LEG's declared order
    assert first[("a", "b")] == ("y", "z")


# ---------------------------------------------------------------- validate


def test_validate_accepts_a_chain():
    net = net_of({"a": ("x", "s"), "b": ("s", "y", "t"), "c": ("t", "z")})
    assert validate(net).ok


def test_validate_rejects_a_triangle():
    net = net_of({"a": ("x", "y"), "b": ("y", "z"), "c": ("z", "x")})
    report = validate(net)
    assert not report.ok
    assert "CyclicNet" in report.codes()


def test_validate_rejects_dangling_relations():
    net = net_of(
        {"a": ("x", "s"), "b": ("s", "y")},
        relations=(Forbidden("x", "y"),),
    )
    report = validate(net)
    assert "DanglingRelation" in report.codes()


def test_validate_rejects_self_relation():
    net = net_of({"a": ("x", "y")}, relations=(Cutoff("x", "x"),))
    assert "DanglingRelation" in validate(net).codes()


def test_validate_rejects_relation_on_undeclared_variable():
    net = net_of({"a": ("x", "y")}, relations=(Forbidden("x", "ghost"),))
    assert "UnknownVariable" in validate(net).codes()


def test_validate_rejects_oversized_legs():
    ids = tuple(f"v{i}" for i in range(13))
    net = net_of({"big": ids})
    assert "LegTooLarge" in validate(net).codes()


def test_validate_rejects_duplicate_variable_ids():
    variables = evidence_vars("x") + evidence_vars("x")
    net = LegNet(variables, (Leg("a", "A", ("x",)),))
    assert "DuplicateVariable" in validate(net).codes()


def test_validate_rejects_duplicate_variable_names():
    variables = (
        Variable("x1", "Same", "evidence", is_bev=True),
        Variable("x2", "Same", "evidence", is_bev=True),
    )
    net = LegNet(variables, (Leg("a", "A", ("x1", "x2")),))
    assert "DuplicateVariable" in validate(net).codes()


def test_validate_rejects_bev_with_wrong_kind():
    variables = (Variable("g", "G", "goal", is_bev=True),)
    net = LegNet(variables, (Leg("a", "A", ("g",)),))
    assert "BevKindMismatch" in validate(net).codes()


def test_validate_rejects_empty_leg():
    net = LegNet(evidence_vars("x"), (Leg("a", "A", ()),))
    assert "EmptyLeg" in validate(net).codes()


def test_validate_rejects_leg_referencing_undeclared_variable():
    net = LegNet(evidence_vars("x"), (Leg("a", "A", ("x", "ghost")),))
    assert "UnknownVariable" in validate(net).codes()


def test_validate_accepts_the_weather_net():
    assert validate(net_from_document(weather_document(), include_cmds=False)).ok


def test_validate_accepts_generated_tree_nets():
    rng = np.random.default_rng(7)
    for _ in range(30):
        net, _ = oracles.random_tree_net(rng)
        assert validate(net).ok


# -------------------------------------------------------- storage_footprint


def test_storage_of_two_sharing_legs():
    net = net_of({"a": ("x", "y", "s"), "b": ("s", "u", "w")})
    assert storage_footprint(net) == (16, 32)


def test_storage_full_joint_for_23_variables():
    ids = tuple(f"v{i}" for i in range(23))
    net = LegNet(evidence_vars(*ids), (Leg("a", "A", ids[:2]),))
    assert storage_footprint(net)[1] == 8_388_608


def test_storage_of_single_tiny_leg():
    net = net_of({"a": ("x",)})
    assert storage_footprint(net) == (2, 2)


def test_storage_of_weather_net_is_far_below_full_joint():
    net = net_from_document(weather_document(), include_cmds=False)
    dense, full = storage_footprint(net)
    assert dense == 176
    assert full == 16384
    assert dense < full
