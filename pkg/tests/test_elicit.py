"""Constraint elicitation: sequencing, pruning, intervals, defaults, builds."""

import numpy as np
import pytest

import oracles
from conftest import (
    FOLK_PREDICTIONS_ATOMS,
    OTHER_PREDICTIONS_ATOMS,
    folk_predictions_state,
    other_predictions_state,
)
from gbi import (
    ConditionalEntry,
    ConstraintKey,
    ConstraintRecord,
    Leg,
    accept_constraint,
    accept_default,
    build_cmd,
    canonical_sequence,
    count_required_constraints,
    entropy,
    feasible_interval,
    forced_zero_atoms,
    forced_zero_keys,
    min_info_default,
    new_elicitation,
    next_key,
    remaining_keys,
    state_from_records,
)
from gbi.elicit import resolved_records
from gbi.errors import (
    ConstraintOutOfRange,
    InfeasibleConstraintSet,
    UndeterminedCondition,
    ZeroCondition,
)
from gbi.net import Cutoff, Forbidden

# Regression constants, each computed once by an independent oracle:
# - basic-solution enumeration for the interval of Pr(P) after the three
#   Other-Predictions forecast constraints (it is still unconstrained);
# - SLSQP maximum entropy for the triple key after six pairwise values;
# - direct subset enumeration for the pruned-count case.
P_INTERVAL_AFTER_FORECASTS = (0.0, 1.0)
TRIPLE_KEY_DEFAULT = 0.2
FIVE_VAR_TRIO_ORDER2_COUNT = 12


def leg3():
    return Leg("t", "T", ("a", "b", "c"))


def six_pairwise_state():
    """Marginals 0.4/0.5/0.6 with pairwise joints 0.25/0.30/0.35 accepted."""
    state = new_elicitation(leg3())
    for subset, value in (
        ({"a"}, 0.4),
        ({"b"}, 0.5),
        ({"a", "b"}, 0.25),
        ({"c"}, 0.6),
        ({"a", "c"}, 0.30),
        ({"b", "c"}, 0.35),
    ):
        state = accept_constraint(state, ConstraintKey("t", subset), value)
    return state


# ------------------------------------------------------- canonical_sequence


def test_canonical_order_for_the_forecaster_trio():
    leg = Leg("op", "Other-Predictions", ("F", "N", "P"))
    subsets = [key.subset for key in canonical_sequence(leg)]
    assert subsets == [
        frozenset({"F"}),
        frozenset({"N"}),
        frozenset({"N", "F"}),
        frozenset({"P"}),
        frozenset({"P", "F"}),
        frozenset({"P", "N"}),
        frozenset({"P", "N", "F"}),
    ]
    assert all(key.leg_id == "op" for key in canonical_sequence(leg))


def test_canonical_sequence_counts_without_relations():
    for m in range(1, 7):
        leg = Leg("x", "X", tuple(f"v{i}" for i in range(m)))
        assert len(canonical_sequence(leg)) == (1 << m) - 1


def test_mutually_exclusive_trio_asks_only_singletons():
    relations = (Forbidden("a", "b"), Forbidden("a", "c"), Forbidden("b", "c"))
    keys = canonical_sequence(leg3(), relations)
    assert [key.subset for key in keys] == [
        frozenset({"a"}),
        frozenset({"b"}),
        frozenset({"c"}),
    ]


def test_single_variable_sequence():
    assert [k.subset for k in canonical_sequence(Leg("s", "S", ("v",)))] == [
        frozenset({"v"})
    ]


def test_key_order_property():
    keys = canonical_sequence(leg3())
    assert [k.order for k in keys] == [1, 1, 2, 1, 2, 2, 3]


def test_classification_matches_enumeration_oracle():
    rng = np.random.default_rng(31)
    for _ in range(40):
        m = int(rng.integers(2, 6))
        ids = tuple(f"v{i}" for i in range(m))
        leg = Leg("x", "X", ids)
        relations = []
        pairs = []
        cuts = []
        for _ in range(int(rng.integers(0, 3))):
            i, j = (int(x) for x in rng.choice(m, size=2, replace=False))
            if rng.random() < 0.5:
                relations.append(Forbidden(ids[i], ids[j]))
                pairs.append((i, j))
            else:
                relations.append(Cutoff(ids[i], ids[j]))
                cuts.append((i, j))
        want_asked, want_zero, want_derived = oracles.classify_keys(m, pairs, cuts)
        got_asked = [
            sum(1 << ids.index(v) for v in key.subset)
            for key in canonical_sequence(leg, relations)
        ]
        assert got_asked == want_asked
        got_zero = {
            sum(1 << ids.index(v) for v in key.subset)
            for key in forced_zero_keys(leg, relations)
        }
        assert got_zero == want_zero
        assert forced_zero_atoms(leg, relations) == oracles.zero_atom_masks(
            m, pairs, cuts
        )


# ------------------------------------------------------------- forced zeros


def test_cutoff_zeroes_dependent_without_prerequisite_atoms():
    leg = Leg("op", "Other-Predictions", ("F", "N", "P"))
    atoms = forced_zero_atoms(leg, (Cutoff("N", "F"),))
    # atoms with N (bit 1) but not F (bit 0)
    assert atoms == {0b010, 0b110}
    assert forced_zero_keys(leg, (Cutoff("N", "F"),)) == set()


def test_cutoff_prunes_redundant_keys_from_the_walk():
    leg = Leg("op", "Other-Predictions", ("F", "N", "P"))
    subsets = [k.subset for k in canonical_sequence(leg, (Cutoff("N", "F"),))]
    assert frozenset({"N"}) not in subsets
    assert frozenset({"P", "N"}) not in subsets
    assert len(subsets) == 5


def test_forbidden_pair_zero_counts_in_a_trio_group():
    relations = (Forbidden("a", "b"),)
    assert len(forced_zero_keys(leg3(), relations)) == 2
    assert forced_zero_atoms(leg3(), relations) == {0b011, 0b111}


def test_no_relations_forces_nothing():
    assert forced_zero_keys(leg3()) == set()
    assert forced_zero_atoms(leg3()) == set()


def test_count_required_constraints():
    assert count_required_constraints(leg3()) == 7
    trio = (Forbidden("a", "b"), Forbidden("a", "c"), Forbidden("b", "c"))
    assert count_required_constraints(leg3(), trio) == 3
    leg5 = Leg("q", "Q", ("a", "b", "c", "d", "e"))
    assert (
        count_required_constraints(leg5, trio, max_order=2)
        == FIVE_VAR_TRIO_ORDER2_COUNT
    )
    asked, _, _ = oracles.classify_keys(5, [(0, 1), (0, 2), (1, 2)], [])
    assert FIVE_VAR_TRIO_ORDER2_COUNT == sum(
        1 for mask in asked if mask.bit_count() <= 2
    )


# --------------------------------------------------------- feasible_interval


def test_interval_after_two_marginals_is_frechet():
    state = new_elicitation(Leg("op", "OP", ("F", "N", "P")))
    state = accept_constraint(state, ConstraintKey("op", {"F"}), 0.45)
    state = accept_constraint(state, ConstraintKey("op", {"N"}), 0.55)
    lo, hi = feasible_interval(state, ConstraintKey("op", {"F", "N"}))
    assert lo == pytest.approx(0.0, abs=1e-9)
    assert hi == pytest.approx(0.45, abs=1e-9)


def test_interval_of_forced_zero_key_is_degenerate():
    state = new_elicitation(leg3(), (Forbidden("a", "b"),))
    assert feasible_interval(state, ConstraintKey("t", {"a", "b"})) == (0.0, 0.0)


def test_interval_for_p_after_the_three_forecast_constraints():
    state = new_elicitation(Leg("op", "OP", ("F", "N", "P")))
    state = accept_constraint(state, ConstraintKey("op", {"F"}), 0.45)
    state = accept_constraint(state, ConstraintKey("op", {"N"}), 0.55)
    state = accept_constraint(state, ConstraintKey("op", {"F", "N"}), 0.35)
    lo, hi = feasible_interval(state, ConstraintKey("op", {"P"}))
    assert lo == pytest.approx(P_INTERVAL_AFTER_FORECASTS[0], abs=1e-9)
    assert hi == pytest.approx(P_INTERVAL_AFTER_FORECASTS[1], abs=1e-9)
    assert lo <= 0.65 <= hi
    want = oracles.lp_bounds_enum(
        3, [(0b001, 0.45), (0b010, 0.55), (0b011, 0.35)], (), 0b100
    )
    assert lo == pytest.approx(want[0], abs=1e-7)
    assert hi == pytest.approx(want[1], abs=1e-7)


def test_interval_rejects_keys_out_of_turn():
    state = new_elicitation(leg3())
    with pytest.raises(ValueError, match="next canonical key"):
        feasible_interval(state, ConstraintKey("t", {"b"}))


def test_intervals_match_vertex_enumeration_oracle():
    rng = np.random.default_rng(97)
    for _ in range(25):
        state = new_elicitation(leg3())
        accepted = []
        steps = int(rng.integers(0, 6))
        for _ in range(steps):
            key = next_key(state)
            lo, hi = feasible_interval(state, key)
            value = float(rng.uniform(lo, hi))
            state = accept_constraint(state, key, value)
            mask = sum(1 << "abc".index(v) for v in key.subset)
            accepted.append((mask, state.records[-1].value))
        key = next_key(state)
        lo, hi = feasible_interval(state, key)
        mask = sum(1 << "abc".index(v) for v in key.subset)
        want_lo, want_hi = oracles.lp_bounds_enum(3, accepted, (), mask)
        assert lo == pytest.approx(want_lo, abs=1e-7)
        assert hi == pytest.approx(want_hi, abs=1e-7)


# --------------------------------------------------------- min_info_default


def test_pairwise_default_is_the_independence_product():
    state = new_elicitation(Leg("op", "OP", ("F", "N", "P")))
    state = accept_constraint(state, ConstraintKey("op", {"F"}), 0.45)
    state = accept_constraint(state, ConstraintKey("op", {"N"}), 0.55)
    value = min_info_default(state, ConstraintKey("op", {"F", "N"}))
    assert value == pytest.approx(0.2475, abs=1e-6)


def test_default_without_constraints_is_half():
    state = new_elicitation(leg3())
    assert min_info_default(state, ConstraintKey("t", {"a"})) == pytest.approx(
        0.5, abs=1e-9
    )


def test_triple_key_default_after_six_constraints():
    state = six_pairwise_state()
    value = min_info_default(state, ConstraintKey("t", {"a", "b", "c"}))
    assert value == pytest.approx(TRIPLE_KEY_DEFAULT, abs=1e-8)
    want = oracles.conjunction_of(
        oracles.maxent_table(
            3,
            [
                (0b001, 0.4),
                (0b010, 0.5),
                (0b011, 0.25),
                (0b100, 0.6),
                (0b101, 0.30),
                (0b110, 0.35),
            ],
        ),
        0b111,
    )
    assert value == pytest.approx(want, abs=1e-6)


def test_defaults_of_unlinked_variables_multiply():
    state = new_elicitation(leg3())
    state = accept_constraint(state, ConstraintKey("t", {"a"}), 0.3)
    state = accept_constraint(state, ConstraintKey("t", {"b"}), 0.5)
    state = accept_default(state)  # a&b at 0.15
    assert state.records[-1].value == pytest.approx(0.15, abs=1e-6)
    state = accept_constraint(state, ConstraintKey("t", {"c"}), 0.7)
    state = accept_default(state)  # a&c
    state = accept_default(state)  # b&c
    value = min_info_default(state, ConstraintKey("t", {"a", "b", "c"}))
    assert value == pytest.approx(0.3 * 0.5 * 0.7, abs=1e-6)


def test_default_always_inside_interval():
    rng = np.random.default_rng(55)
    for _ in range(20):
        m = int(rng.integers(2, 5))
        leg = Leg("x", "X", tuple(f"v{i}" for i in range(m)))
        state = new_elicitation(leg)
        for _ in range(int(rng.integers(0, (1 << m) - 1))):
            key = next_key(state)
            lo, hi = feasible_interval(state, key)
            state = accept_constraint(state, key, float(rng.uniform(lo, hi)))
        key = next_key(state)
        if key is None:
            continue
        lo, hi = feasible_interval(state, key)
        value = min_info_default(state, key)
        assert lo - 1e-9 <= value <= hi + 1e-9


# --------------------------------------------------------- accept_constraint


def test_certainty_conditional_converts_to_joint():
    state = other_predictions_state()
    record = state.records[-1]
    assert record.entry_form == "conditional"
    assert record.given == frozenset({"N", "F"})
    assert record.given_value == pytest.approx(1.0)
    assert record.value == pytest.approx(0.35, abs=1e-9)


def test_conditional_on_recorded_pair():
    state = folk_predictions_state()
    record = state.records[-1]
    assert record.value == pytest.approx(0.297, abs=1e-9)
    assert record.given_value == pytest.approx(0.99)


def test_out_of_range_value_reports_the_interval():
    state = new_elicitation(Leg("op", "OP", ("F", "N", "P")))
    state = accept_constraint(state, ConstraintKey("op", {"F"}), 0.45)
    state = accept_constraint(state, ConstraintKey("op", {"N"}), 0.55)
    with pytest.raises(ConstraintOutOfRange) as exc:
        accept_constraint(state, ConstraintKey("op", {"F", "N"}), 0.50)
    assert exc.value.lo == pytest.approx(0.0, abs=1e-9)
    assert exc.value.hi == pytest.approx(0.45, abs=1e-9)


def test_accepting_at_an_interval_endpoint_is_allowed():
    state = new_elicitation(Leg("op", "OP", ("F", "N", "P")))
    state = accept_constraint(state, ConstraintKey("op", {"F"}), 0.45)
    state = accept_constraint(state, ConstraintKey("op", {"N"}), 0.55)
    state = accept_constraint(state, ConstraintKey("op", {"F", "N"}), 0.45)
    assert state.records[-1].value == pytest.approx(0.45, abs=1e-12)


def test_conditional_on_zero_probability_condition():
    state = new_elicitation(leg3())
    state = accept_constraint(state, ConstraintKey("t", {"a"}), 0.0)
    state = accept_constraint(state, ConstraintKey("t", {"b"}), 0.5)
    with pytest.raises(ZeroCondition):
        accept_constraint(
            state, ConstraintKey("t", {"a", "b"}), ConditionalEntry({"a"}, 0.5)
        )


def test_conditional_on_undetermined_condition():
    # A stored walk may skip keys; conditioning on a skipped one must fail.
    records = (
        ConstraintRecord(ConstraintKey("t", frozenset({"a"})), 0.3, "user-specified"),
        ConstraintRecord(ConstraintKey("t", frozenset({"c"})), 0.7, "user-specified"),
        ConstraintRecord(
            ConstraintKey("t", frozenset({"a", "c"})), 0.21, "user-specified"
        ),
    )
    state = state_from_records(leg3(), (), records)
    assert next_key(state).subset == frozenset({"b", "c"})
    with pytest.raises(UndeterminedCondition):
        accept_constraint(
            state,
            ConstraintKey("t", {"b", "c"}),
            ConditionalEntry({"b"}, 0.5),
        )


def test_conditional_given_must_be_proper_subset():
    state = new_elicitation(leg3())
    state = accept_constraint(state, ConstraintKey("t", {"a"}), 0.4)
    with pytest.raises(ValueError, match="proper subset"):
        accept_constraint(
            state, ConstraintKey("t", {"b"}), ConditionalEntry({"c"}, 0.5)
        )


def test_conditional_probability_must_be_a_probability():
    state = new_elicitation(leg3())
    state = accept_constraint(state, ConstraintKey("t", {"a"}), 0.4)
    state = accept_constraint(state, ConstraintKey("t", {"b"}), 0.5)
    with pytest.raises(ConstraintOutOfRange):
        accept_constraint(
            state, ConstraintKey("t", {"a", "b"}), ConditionalEntry({"a"}, 1.5)
        )


def test_accept_rejects_keys_out_of_turn():
    state = new_elicitation(leg3())
    with pytest.raises(ValueError, match="next canonical key"):
        accept_constraint(state, ConstraintKey("t", {"c"}), 0.5)


def test_accept_returns_a_new_state():
    state = new_elicitation(leg3())
    grown = accept_constraint(state, ConstraintKey("t", {"a"}), 0.4)
    assert state.records == ()
    assert len(grown.records) == 1


def test_conditional_and_joint_entries_are_equivalent():
    base = new_elicitation(leg3())
    base = accept_constraint(base, ConstraintKey("t", {"a"}), 0.4)
    base = accept_constraint(base, ConstraintKey("t", {"b"}), 0.5)
    key = ConstraintKey("t", {"a", "b"})
    via_conditional = accept_constraint(base, key, ConditionalEntry({"a"}, 0.3))
    via_joint = accept_constraint(base, key, 0.3 * 0.4)
    assert via_conditional.records[-1].value == pytest.approx(
        via_joint.records[-1].value, abs=1e-15
    )
    a = build_cmd(via_conditional)
    b = build_cmd(via_joint)
    assert a.allclose(b, tol=1e-9)


# ------------------------------------------------------------- walk cursor


def test_next_key_and_remaining_walk():
    state = new_elicitation(leg3())
    assert next_key(state).subset == frozenset({"a"})
    assert len(remaining_keys(state)) == 7
    for _ in range(7):
        state = accept_default(state)
    assert next_key(state) is None
    assert remaining_keys(state) == []
    with pytest.raises(ValueError, match="no keys left"):
        accept_default(state)


# ----------------------------------------------------------------- build_cmd


def test_build_reconstructs_other_predictions(other_predictions_cmd):
    assert np.max(
        np.abs(other_predictions_cmd.atoms - OTHER_PREDICTIONS_ATOMS)
    ) < 1e-9


def test_build_reconstructs_folk_predictions(folk_predictions_cmd):
    assert np.max(np.abs(folk_predictions_cmd.atoms - FOLK_PREDICTIONS_ATOMS)) < 5e-5


def test_build_from_marginals_gives_the_product():
    records = tuple(
        ConstraintRecord(ConstraintKey("t", frozenset(s)), v, "user-specified")
        for s, v in ((("a",), 0.3), (("b",), 0.5), (("c",), 0.7))
    )
    state = state_from_records(leg3(), (), records)
    cmd = build_cmd(state, max_specified_order=1)
    expected = []
    for atom in range(8):
        p = 1.0
        for bit, q in enumerate((0.3, 0.5, 0.7)):
            p *= q if atom >> bit & 1 else 1.0 - q
        expected.append(p)
    assert np.allclose(cmd.atoms, expected, atol=1e-9)


def test_build_requires_answers_up_to_the_requested_order():
    state = new_elicitation(leg3())
    state = accept_constraint(state, ConstraintKey("t", {"a"}), 0.3)
    with pytest.raises(ValueError, match="no accepted value"):
        build_cmd(state, max_specified_order=1)
    with pytest.raises(ValueError, match="no accepted value"):
        build_cmd(state, max_specified_order="all")
    build_cmd(state)  # no floor requested: defaults fill the gaps


def test_build_reproduces_accepted_constraints():
    rng = np.random.default_rng(11)
    for _ in range(15):
        m = int(rng.integers(2, 5))
        leg = Leg("x", "X", tuple(f"v{i}" for i in range(m)))
        state = new_elicitation(leg)
        for _ in range(int(rng.integers(0, 1 << m))):
            key = next_key(state)
            if key is None:
                break
            lo, hi = feasible_interval(state, key)
            state = accept_constraint(state, key, float(rng.uniform(lo, hi)))
        cmd = build_cmd(state)
        table = oracles.naive_conjunctions(cmd.atoms.tolist(), m)
        for record in state.records:
            mask = cmd.mask_of(record.key.subset)
            assert table[mask] == pytest.approx(record.value, abs=1e-9)


def test_build_zeroes_forbidden_atoms_exactly():
    relations = (Forbidden("a", "b"),)
    state = new_elicitation(leg3(), relations)
    state = accept_constraint(state, ConstraintKey("t", {"a"}), 0.3)
    state = accept_constraint(state, ConstraintKey("t", {"b"}), 0.4)
    cmd = build_cmd(state)
    assert cmd.atoms[0b011] == 0.0
    assert cmd.atoms[0b111] == 0.0


def test_build_zeroes_cutoff_atoms_exactly():
    relations = (Cutoff("b", "a"),)
    state = new_elicitation(leg3(), relations)
    state = accept_constraint(state, ConstraintKey("t", {"a"}), 0.6)
    cmd = build_cmd(state)
    assert cmd.atoms[0b010] == 0.0
    assert cmd.atoms[0b110] == 0.0


def test_fully_specified_build_matches_generic_maxent():
    # With every key pinned there is a unique solution, so the subset-sum
    # inversion and a generic entropy maximizer must land on the same table.
    state = folk_predictions_state()
    cmd = build_cmd(state, "all")
    equalities = [
        (cmd.mask_of(r.key.subset), r.value) for r in state.records
    ]
    want = oracles.maxent_table(3, equalities)
    assert np.max(np.abs(cmd.atoms - want)) < 1e-6


def test_default_completed_build_beats_feasible_competitors():
    rng = np.random.default_rng(13)
    for _ in range(5):
        state = new_elicitation(leg3())
        for _ in range(int(rng.integers(0, 4))):
            key = next_key(state)
            lo, hi = feasible_interval(state, key)
            pad = 0.1 * (hi - lo)
            state = accept_constraint(state, key, float(rng.uniform(lo + pad, hi - pad)))
        cmd = build_cmd(state)
        equalities = [(cmd.mask_of(r.key.subset), r.value) for r in state.records]
        competitors = oracles.feasible_competitors(
            np.asarray(cmd.atoms), equalities, 20, rng
        )
        assert competitors
        built = entropy(cmd)
        for rival in competitors:
            assert built >= oracles.entropy_direct(rival.tolist()) - 1e-9


# ------------------------------------------------------- stored record walks


def test_state_from_records_allows_gaps():
    leg = leg3()
    records = (
        ConstraintRecord(ConstraintKey("t", frozenset({"a"})), 0.3, "user-specified"),
        ConstraintRecord(ConstraintKey("t", frozenset({"c"})), 0.7, "user-specified"),
    )
    state = state_from_records(leg, (), records)
    assert len(state.records) == 2
    cmd = build_cmd(state)
    assert oracles.conjunction_of(np.asarray(cmd.atoms), 0b001) == pytest.approx(
        0.3, abs=1e-9
    )


def test_state_from_records_rejects_disorder():
    leg = leg3()
    records = (
        ConstraintRecord(ConstraintKey("t", frozenset({"c"})), 0.7, "user-specified"),
        ConstraintRecord(ConstraintKey("t", frozenset({"a"})), 0.3, "user-specified"),
    )
    with pytest.raises(ValueError, match="canonical order"):
        state_from_records(leg, (), records)


def test_state_from_records_rejects_pruned_keys():
    relations = (Forbidden("a", "b"),)
    records = (
        ConstraintRecord(
            ConstraintKey("t", frozenset({"a", "b"})), 0.2, "user-specified"
        ),
    )
    with pytest.raises(InfeasibleConstraintSet):
        state_from_records(leg3(), relations, records)


def test_state_from_records_rejects_out_of_interval_values():
    records = (
        ConstraintRecord(ConstraintKey("t", frozenset({"a"})), 0.4, "user-specified"),
        ConstraintRecord(ConstraintKey("t", frozenset({"b"})), 0.5, "user-specified"),
        ConstraintRecord(
            ConstraintKey("t", frozenset({"a", "b"})), 0.41, "user-specified"
        ),
    )
    with pytest.raises(ConstraintOutOfRange):
        state_from_records(leg3(), (), records)


def test_resolved_records_tag_pruned_keys():
    relations = (Forbidden("a", "b"), Cutoff("c", "a"))
    state = new_elicitation(leg3(), relations)
    walk = canonical_sequence(leg3(), relations)
    for _ in walk:
        state = accept_default(state)
    resolved = {
        (tuple(sorted(r.key.subset)), r.source): r.value
        for r in resolved_records(state)
    }
    assert resolved[(("a", "b"), "forced-zero")] == 0.0
    assert resolved[(("a", "b", "c"), "forced-zero")] == 0.0
    # Pr(c) equals Pr(a & c) because c cannot occur without a.
    assert resolved[(("c",), "derived-from-cutoff")] == pytest.approx(
        resolved[(("a", "c"), "user-specified")]
        if (("a", "c"), "user-specified") in resolved
        else resolved[(("a", "c"), "defaulted")],
        abs=1e-12,
    )
