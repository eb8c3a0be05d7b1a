"""Guided construction of a LEG's CMD from conjunction constraints.

The canonical questioning order covers, for the k-th declared variable,
the keys {v_k} union T for every subset T of the earlier variables, T in
increasing bitmask order.  Structural relations prune the sequence:
forbidden pairs force keys (and atoms) to zero, and a cutoff makes every
key holding the dependent without its prerequisite redundant.

Each answer is screened against the exact feasible interval (two linear
programs over the atom polytope), and unanswered keys default to their
value under the maximum-entropy completion of whatever was accepted
(iterative proportional fitting against the uniform distribution).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.optimize import linprog

from . import config
from .dist import Cmd, ConjunctionTable, _superset_sums, moebius
from .errors import (
    ConstraintOutOfRange,
    InfeasibleConstraintSet,
    UndeterminedCondition,
    UnknownVariable,
    ZeroCondition,
)
from .net import Cutoff, Forbidden, Leg, StructuralRelation

ConstraintSource = Literal[
    "user-specified", "defaulted", "forced-zero", "derived-from-cutoff"
]


@dataclass(frozen=True)
class ConstraintKey:
    """A conjunction key: Pr(every variable in subset occurs) within one LEG."""

    leg_id: str
    subset: frozenset[str]

    def __init__(self, leg_id: str, subset: Iterable[str]):
        object.__setattr__(self, "leg_id", leg_id)
        object.__setattr__(self, "subset", frozenset(subset))

    @property
    def order(self) -> int:
        return len(self.subset)


@dataclass(frozen=True)
class ConditionalEntry:
    """Pr(rest of key | given) = value; stored as the equivalent joint."""

    given: frozenset[str]
    value: float

    def __init__(self, given: Iterable[str], value: float):
        object.__setattr__(self, "given", frozenset(given))
        object.__setattr__(self, "value", float(value))


@dataclass(frozen=True)
class ConstraintRecord:
    key: ConstraintKey
    value: float
    source: ConstraintSource
    entry_form: Literal["joint", "conditional"] = "joint"
    given: frozenset[str] | None = None
    given_value: float | None = None


def _mask_of(leg: Leg, subset: Iterable[str]) -> int:
    mask = 0
    for name in subset:
        try:
            mask |= 1 << leg.variables.index(name)
        except ValueError:
            raise UnknownVariable(f"variable {name!r} not in LEG {leg.id!r}") from None
    return mask


def _subset_of(leg: Leg, mask: int) -> frozenset[str]:
    return frozenset(v for k, v in enumerate(leg.variables) if mask >> k & 1)


def _leg_relations(
    leg: Leg, relations: Sequence[StructuralRelation]
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """(forbidden pair masks, cutoff (dependent, prerequisite) bit masks), members only."""
    members = set(leg.variables)
    forbidden: list[tuple[int, int]] = []
    cutoffs: list[tuple[int, int]] = []
    for r in relations:
        if isinstance(r, Forbidden) and {r.a, r.b} <= members:
            forbidden.append((_mask_of(leg, [r.a]), _mask_of(leg, [r.b])))
        elif isinstance(r, Cutoff) and {r.dependent, r.prerequisite} <= members:
            cutoffs.append(
                (_mask_of(leg, [r.dependent]), _mask_of(leg, [r.prerequisite]))
            )
    return forbidden, cutoffs


def _cutoff_closure(mask: int, cutoffs: Sequence[tuple[int, int]]) -> int:
    """Add every prerequisite transitively implied by members of the key."""
    changed = True
    while changed:
        changed = False
        for dep, pre in cutoffs:
            if mask & dep and not mask & pre:
                mask |= pre
                changed = True
    return mask


def _hits_forbidden(mask: int, forbidden: Sequence[tuple[int, int]]) -> bool:
    return any(mask & a and mask & b for a, b in forbidden)


def _canonical_masks(m: int) -> list[int]:
    """All nonempty key masks: variable blocks in declared order, then subset order."""
    return sorted(range(1, 1 << m), key=lambda mask: (mask.bit_length(), mask))


def _classify(
    leg: Leg, relations: Sequence[StructuralRelation]
) -> tuple[list[int], set[int], dict[int, int]]:
    """Split key masks into (asked in order, forced-zero set, derived -> closure)."""
    forbidden, cutoffs = _leg_relations(leg, relations)
    asked: list[int] = []
    zero: set[int] = set()
    derived: dict[int, int] = {}
    for mask in _canonical_masks(len(leg.variables)):
        closed = _cutoff_closure(mask, cutoffs)
        if _hits_forbidden(closed, forbidden):
            zero.add(mask)
        elif closed != mask:
            derived[mask] = closed
        else:
            asked.append(mask)
    return asked, zero, derived


def canonical_sequence(
    leg: Leg, relations: Sequence[StructuralRelation] = ()
) -> list[ConstraintKey]:
    """The keys actually asked, in canonical order; pruned keys are omitted."""
    asked, _, _ = _classify(leg, relations)
    return [ConstraintKey(leg.id, _subset_of(leg, mask)) for mask in asked]


def forced_zero_keys(
    leg: Leg, relations: Sequence[StructuralRelation] = ()
) -> set[ConstraintKey]:
    _, zero, _ = _classify(leg, relations)
    return {ConstraintKey(leg.id, _subset_of(leg, mask)) for mask in zero}


def forced_zero_atoms(
    leg: Leg, relations: Sequence[StructuralRelation] = ()
) -> set[int]:
    """Atom indexes that structural relations pin to probability zero."""
    forbidden, cutoffs = _leg_relations(leg, relations)
    n = 1 << len(leg.variables)
    out = set()
    for atom in range(n):
        if _hits_forbidden(atom, forbidden):
            out.add(atom)
        elif any(atom & dep and not atom & pre for dep, pre in cutoffs):
            out.add(atom)
    return out


def count_required_constraints(
    leg: Leg,
    relations: Sequence[StructuralRelation] = (),
    max_order: int | None = None,
) -> int:
    """How many keys the canonical sequence will ask, optionally capped by order."""
    asked, _, _ = _classify(leg, relations)
    if max_order is None:
        return len(asked)
    return sum(1 for mask in asked if mask.bit_count() <= max_order)


@dataclass(frozen=True, eq=False)
class ElicitationState:
    """Immutable elicitation progress for one LEG.

    Records hold user answers (and frozen defaults) in canonical order;
    gaps are allowed when a document supplies only some keys, and are
    filled with minimum-information defaults at build time.
    """

    leg: Leg
    relations: tuple[StructuralRelation, ...]
    records: tuple[ConstraintRecord, ...] = ()

    def __init__(self, leg, relations=(), records=()):
        object.__setattr__(self, "leg", leg)
        object.__setattr__(self, "relations", tuple(relations))
        object.__setattr__(self, "records", tuple(records))


def new_elicitation(
    leg: Leg, relations: Sequence[StructuralRelation] = ()
) -> ElicitationState:
    return ElicitationState(leg, tuple(relations))


def _state_tables(state: ElicitationState):
    asked, zero, derived = _classify(state.leg, state.relations)
    return asked, zero, derived


def _record_mask(state: ElicitationState, record: ConstraintRecord) -> int:
    return _mask_of(state.leg, record.key.subset)


def _accepted_by_mask(state: ElicitationState) -> dict[int, float]:
    return {_record_mask(state, r): r.value for r in state.records}


def next_key(state: ElicitationState) -> ConstraintKey | None:
    """First asked key after the last recorded one; None when the walk is done."""
    asked, _, _ = _state_tables(state)
    if not state.records:
        return ConstraintKey(state.leg.id, _subset_of(state.leg, asked[0])) if asked else None
    position = {mask: i for i, mask in enumerate(asked)}
    last = max(position[_record_mask(state, r)] for r in state.records)
    if last + 1 >= len(asked):
        return None
    return ConstraintKey(state.leg.id, _subset_of(state.leg, asked[last + 1]))


def remaining_keys(state: ElicitationState) -> list[ConstraintKey]:
    asked, _, _ = _state_tables(state)
    recorded = set(_accepted_by_mask(state))
    return [
        ConstraintKey(state.leg.id, _subset_of(state.leg, mask))
        for mask in asked
        if mask not in recorded
    ]


def determined_value(state: ElicitationState, subset: Iterable[str]) -> float | None:
    """Value of Pr(conjunction of subset) if already pinned down, else None.

    The empty subset is 1; forced-zero keys are 0; a cutoff-redundant key
    resolves to its closure's recorded value.
    """
    mask = _mask_of(state.leg, subset)
    if mask == 0:
        return 1.0
    forbidden, cutoffs = _leg_relations(state.leg, state.relations)
    closed = _cutoff_closure(mask, cutoffs)
    if _hits_forbidden(closed, forbidden):
        return 0.0
    return _accepted_by_mask(state).get(closed)


# ---------------------------------------------------------------- solvers


def _superset_rows(n: int, masks: Iterable[int]) -> np.ndarray:
    idx = np.arange(n)
    return np.array([(idx & mask) == mask for mask in masks], dtype=float)


def _zero_atom_array(leg: Leg, relations: Sequence[StructuralRelation]) -> np.ndarray:
    n = 1 << len(leg.variables)
    zero = np.zeros(n, dtype=bool)
    for atom in forced_zero_atoms(leg, relations):
        zero[atom] = True
    return zero


def _lp_interval(
    m: int,
    constraints: Sequence[tuple[int, float]],
    zero_atoms: np.ndarray,
    target_mask: int,
) -> tuple[float, float]:
    """Exact min and max of Pr(conjunction of target) over the constrained polytope."""
    n = 1 << m
    rows = [np.ones(n)]
    rhs = [1.0]
    if constraints:
        rows.extend(_superset_rows(n, (mask for mask, _ in constraints)))
        rhs.extend(value for _, value in constraints)
    a_eq = np.array(rows)
    b_eq = np.array(rhs)
    bounds = [(0.0, 0.0) if zero_atoms[i] else (0.0, 1.0) for i in range(n)]
    c = _superset_rows(n, [target_mask])[0]
    lo_res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs-ds")
    hi_res = linprog(-c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs-ds")
    if lo_res.status != 0 or hi_res.status != 0:
        raise InfeasibleConstraintSet(
            "accepted constraints admit no distribution "
            f"(solver status {lo_res.status}/{hi_res.status})"
        )
    lo = max(0.0, float(lo_res.fun))
    hi = min(1.0, float(-hi_res.fun))
    if lo > hi:
        lo = hi = (lo + hi) / 2.0
    return lo, hi


def _ipf_fit(
    m: int,
    constraints: Sequence[tuple[int, float]],
    zero_atoms: np.ndarray,
    tol: float = config.IPF_TOL,
    max_sweeps: int = config.IPF_MAX_SWEEPS,
) -> np.ndarray:
    """Maximum-entropy atom table via iterative proportional fitting.

    Starts uniform over atoms not forced to zero and, per constraint,
    rescales the two cells {atoms >= key} / rest to their target masses.
    """
    n = 1 << m
    p = np.ones(n)
    p[zero_atoms] = 0.0
    total = p.sum()
    if total == 0.0:
        raise InfeasibleConstraintSet("every atom is forced to zero")
    p /= total
    cells = [(_superset_rows(n, [mask])[0].astype(bool), value) for mask, value in constraints]
    for _ in range(max_sweeps):
        worst = 0.0
        for cell, value in cells:
            inside = float(p[cell].sum())
            outside = float(p[~cell].sum())
            worst = max(worst, abs(inside - value))
            if inside <= 0.0:
                if value > tol:
                    raise InfeasibleConstraintSet(
                        "constraint demands mass on atoms already pinned to zero"
                    )
                p[cell] = 0.0
                if outside > 0.0:
                    p[~cell] *= 1.0 / outside
                continue
            if outside <= 0.0 and value < 1.0 - tol:
                raise InfeasibleConstraintSet(
                    "constraint demands mass outside atoms already pinned to zero"
                )
            p[cell] *= value / inside
            if outside > 0.0:
                p[~cell] *= (1.0 - value) / outside
        if worst < tol:
            break
    return p


def _constraint_list(state: ElicitationState) -> list[tuple[int, float]]:
    return [(_record_mask(state, r), r.value) for r in state.records]


def feasible_interval(state: ElicitationState, key: ConstraintKey) -> tuple[float, float]:
    """Exact [lo, hi] for the next key's joint value given everything accepted.

    Keys pinned to zero by relations answer the degenerate [0, 0] even
    though the walk never asks them; any other key must be the next one.
    """
    mask = _mask_of(state.leg, key.subset)
    forbidden, cutoffs = _leg_relations(state.leg, state.relations)
    if _hits_forbidden(_cutoff_closure(mask, cutoffs), forbidden):
        return 0.0, 0.0
    expected = next_key(state)
    if expected is None or key.subset != expected.subset:
        raise ValueError(f"key {sorted(key.subset)} is not the next canonical key")
    zero = _zero_atom_array(state.leg, state.relations)
    return _lp_interval(
        len(state.leg.variables),
        _constraint_list(state),
        zero,
        mask,
    )


def min_info_default(state: ElicitationState, key: ConstraintKey) -> float:
    """The key's value under the maximum-entropy completion of the accepted set."""
    expected = next_key(state)
    if expected is None or key.subset != expected.subset:
        raise ValueError(f"key {sorted(key.subset)} is not the next canonical key")
    lo, hi = feasible_interval(state, key)
    value = _maxent_value(state, _mask_of(state.leg, key.subset))
    return min(max(value, lo), hi)


def _maxent_value(state: ElicitationState, mask: int) -> float:
    zero = _zero_atom_array(state.leg, state.relations)
    p = _ipf_fit(len(state.leg.variables), _constraint_list(state), zero)
    n = 1 << len(state.leg.variables)
    cell = (np.arange(n) & mask) == mask
    return float(p[cell].sum())


def _validated_joint(
    state: ElicitationState,
    key: ConstraintKey,
    entry: float | ConditionalEntry,
) -> tuple[float, Literal["joint", "conditional"], frozenset[str] | None, float | None]:
    if isinstance(entry, ConditionalEntry):
        if not entry.given < key.subset:
            raise ValueError("conditioning subset must be a proper subset of the key")
        base = determined_value(state, entry.given)
        if base is None:
            raise UndeterminedCondition(
                f"Pr of condition {sorted(entry.given)} has not been determined yet"
            )
        if base <= config.ZERO_MASS:
            raise ZeroCondition(
                f"condition {sorted(entry.given)} has probability zero"
            )
        if not 0.0 <= entry.value <= 1.0:
            raise ConstraintOutOfRange(
                f"conditional probability {entry.value!r} outside [0, 1]", 0.0, 1.0
            )
        return entry.value * base, "conditional", entry.given, entry.value
    return float(entry), "joint", None, None


def accept_constraint(
    state: ElicitationState,
    key: ConstraintKey,
    entry: float | ConditionalEntry,
    source: ConstraintSource = "user-specified",
) -> ElicitationState:
    """Record a value for the next canonical key and advance.

    Joint entries carry the probability directly; conditional entries are
    converted through the already-determined probability of the condition.
    Values outside the feasible interval (with slack) are rejected.
    """
    expected = next_key(state)
    if expected is None or key.subset != expected.subset:
        raise ValueError(f"key {sorted(key.subset)} is not the next canonical key")
    value, form, given, given_value = _validated_joint(state, key, entry)
    lo, hi = feasible_interval(state, key)
    if not (lo - config.INTERVAL_SLACK <= value <= hi + config.INTERVAL_SLACK):
        raise ConstraintOutOfRange(
            f"Pr({'&'.join(sorted(key.subset))}) = {value:.10g} outside "
            f"feasible interval [{lo:.10g}, {hi:.10g}]",
            lo,
            hi,
        )
    record = ConstraintRecord(
        key=ConstraintKey(state.leg.id, key.subset),
        value=min(max(value, lo), hi),
        source=source,
        entry_form=form,
        given=given,
        given_value=given_value,
    )
    return ElicitationState(state.leg, state.relations, state.records + (record,))


def accept_default(state: ElicitationState) -> ElicitationState:
    """Freeze the offered minimum-information default for the next key."""
    key = next_key(state)
    if key is None:
        raise ValueError("no keys left to default")
    value = min_info_default(state, key)
    record = ConstraintRecord(key=key, value=value, source="defaulted")
    return ElicitationState(state.leg, state.relations, state.records + (record,))


def state_from_records(
    leg: Leg,
    relations: Sequence[StructuralRelation],
    records: Sequence[ConstraintRecord],
) -> ElicitationState:
    """Rebuild a state from stored records, revalidating each in sequence.

    Records may skip keys (documents often pin only low-order constraints)
    but must appear in canonical order and stay inside their intervals.
    """
    asked, _, _ = _classify(leg, relations)
    position = {mask: i for i, mask in enumerate(asked)}
    state = ElicitationState(leg, tuple(relations))
    last = -1
    zero_arr = _zero_atom_array(leg, relations)
    for record in records:
        mask = _mask_of(leg, record.key.subset)
        if mask not in position:
            raise InfeasibleConstraintSet(
                f"key {sorted(record.key.subset)} is pruned by relations and cannot hold a record"
            )
        if position[mask] <= last:
            raise ValueError("constraint records out of canonical order")
        last = position[mask]
        lo, hi = _lp_interval(len(leg.variables), _constraint_list(state), zero_arr, mask)
        if not (lo - config.INTERVAL_SLACK <= record.value <= hi + config.INTERVAL_SLACK):
            raise ConstraintOutOfRange(
                f"stored Pr({'&'.join(sorted(record.key.subset))}) = {record.value:.10g} "
                f"outside feasible interval [{lo:.10g}, {hi:.10g}]",
                lo,
                hi,
            )
        state = ElicitationState(
            leg, state.relations, state.records + (replace(record, value=min(max(record.value, lo), hi)),)
        )
    return state


def resolved_records(state: ElicitationState) -> list[ConstraintRecord]:
    """Every determined key in canonical order, including forced and derived ones."""
    forbidden, cutoffs = _leg_relations(state.leg, state.relations)
    accepted = _accepted_by_mask(state)
    out: list[ConstraintRecord] = []
    by_mask = {_record_mask(state, r): r for r in state.records}
    for mask in _canonical_masks(len(state.leg.variables)):
        closed = _cutoff_closure(mask, cutoffs)
        subset = _subset_of(state.leg, mask)
        if _hits_forbidden(closed, forbidden):
            out.append(ConstraintRecord(ConstraintKey(state.leg.id, subset), 0.0, "forced-zero"))
        elif closed != mask:
            if closed in accepted:
                out.append(
                    ConstraintRecord(
                        ConstraintKey(state.leg.id, subset),
                        accepted[closed],
                        "derived-from-cutoff",
                    )
                )
        elif mask in by_mask:
            out.append(by_mask[mask])
    return out


def build_cmd(
    state: ElicitationState,
    max_specified_order: int | Literal["all"] | None = None,
) -> Cmd:
    """Complete the conjunction table and invert it to a CMD.

    Recorded keys keep their exact values; every other asked key is
    filled, in canonical order, with its minimum-information default
    (clamped into its exact feasible interval so the finished table stays
    invertible).  Passing an integer insists that everything up to that
    order was answered; "all" insists on a complete walk.
    """
    leg = state.leg
    m = len(leg.variables)
    n = 1 << m
    asked, zero, derived = _classify(leg, state.relations)
    accepted = _accepted_by_mask(state)

    if max_specified_order is not None:
        for mask in asked:
            order = mask.bit_count()
            if max_specified_order == "all" or order <= max_specified_order:
                if mask not in accepted:
                    raise ValueError(
                        f"key {sorted(_subset_of(leg, mask))} (order {order}) has no accepted value"
                    )

    zero_arr = _zero_atom_array(leg, state.relations)
    table = np.zeros(n)
    table[0] = 1.0
    for mask in zero:
        table[mask] = 0.0
    for mask, value in accepted.items():
        table[mask] = value

    holes = [mask for mask in asked if mask not in accepted]
    if holes:
        # Freezing a key at its maximum-entropy value leaves the maximum-entropy
        # completion unchanged, so a single fit serves every hole; clamping into
        # the running feasible interval absorbs any unconverged residue.
        p = _ipf_fit(m, _constraint_list(state), zero_arr)
        fit_values = _superset_sums(p, m)
        running = [(mask, value) for mask, value in accepted.items()]
        for mask in holes:
            lo, hi = _lp_interval(m, running, zero_arr, mask)
            value = min(max(float(fit_values[mask]), lo), hi)
            table[mask] = value
            running.append((mask, value))

    # Cutoff-redundant keys copy their closure; chains resolve because the
    # closure is itself closed.
    for mask, closed in derived.items():
        table[mask] = table[closed]

    cmd = moebius(ConjunctionTable(leg.variables, table))
    atoms = cmd.atoms.copy()
    atoms[zero_arr] = 0.0
    cmd = Cmd(leg.variables, atoms / atoms.sum())

    check = _superset_sums(cmd.atoms, m)
    for mask, value in accepted.items():
        if abs(float(check[mask]) - value) > config.STRUCT_TOL:
            raise InfeasibleConstraintSet(
                f"completed table violates accepted Pr({'&'.join(sorted(_subset_of(leg, mask)))})"
            )
    return cmd
