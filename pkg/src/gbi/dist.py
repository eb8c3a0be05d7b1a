"""Dense joint distributions over small sets of binary event variables.

A component marginal distribution (CMD) stores one probability per atom,
where an atom is a full occur/not-occur assignment to the group's
variables.  Atom index bit k is set exactly when the k-th declared
variable occurs, so a group of m variables needs 2**m entries.

The conjunction table is the companion representation: one entry per
variable subset S holding Pr(every variable in S occurs).  zeta converts
atoms to conjunction values with an m * 2**m superset-sum transform and
moebius inverts it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import config
from .errors import ImpossibleEvidence, InfeasibleConstraintSet, UnknownVariable

AtomIndex = int


def _check_variables(variables: Iterable[str]) -> tuple[str, ...]:
    names = tuple(variables)
    if not names:
        raise ValueError("a distribution needs at least one variable")
    if len(names) > config.MAX_LEG_VARS:
        raise ValueError(
            f"{len(names)} variables exceed the configured cap of {config.MAX_LEG_VARS}"
        )
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable in group")
    return names


@dataclass(frozen=True, eq=False, init=False)
class Cmd:
    """Immutable joint distribution; bit k of an atom index = variables[k] occurs."""

    variables: tuple[str, ...]
    atoms: np.ndarray

    def __init__(self, variables: Iterable[str], atoms):
        names = _check_variables(variables)
        arr = np.array(atoms, dtype=float)
        if arr.shape != (1 << len(names),):
            raise ValueError(
                f"expected {1 << len(names)} atoms for {len(names)} variables, got {arr.shape}"
            )
        if np.any(arr < -config.STRUCT_TOL):
            raise ValueError(f"negative atom probability {arr.min()!r}")
        arr = np.where(arr < 0.0, 0.0, arr)
        total = float(arr.sum())
        if abs(total - 1.0) > config.STRUCT_TOL:
            raise ValueError(f"atoms sum to {total!r}, not 1")
        arr /= total
        arr.setflags(write=False)
        object.__setattr__(self, "variables", names)
        object.__setattr__(self, "atoms", arr)

    @property
    def var_count(self) -> int:
        return len(self.variables)

    def bit(self, variable: str) -> int:
        try:
            return self.variables.index(variable)
        except ValueError:
            raise UnknownVariable(f"variable {variable!r} not in group") from None

    def mask_of(self, subset: Iterable[str]) -> int:
        mask = 0
        for name in subset:
            mask |= 1 << self.bit(name)
        return mask

    def allclose(self, other: "Cmd", tol: float = config.STRUCT_TOL) -> bool:
        return self.variables == other.variables and bool(
            np.all(np.abs(self.atoms - other.atoms) <= tol)
        )

    @staticmethod
    def uniform(variables: Iterable[str]) -> "Cmd":
        names = _check_variables(variables)
        n = 1 << len(names)
        return Cmd(names, np.full(n, 1.0 / n))

    def __repr__(self) -> str:
        return f"Cmd({list(self.variables)}, {self.atoms.tolist()})"


@dataclass(frozen=True, eq=False, init=False)
class ConjunctionTable:
    """Pr(all of S occur) for every subset S of the group, indexed by bitmask."""

    variables: tuple[str, ...]
    values: np.ndarray

    def __init__(self, variables: Iterable[str], values):
        names = _check_variables(variables)
        arr = np.array(values, dtype=float)
        if arr.shape != (1 << len(names),):
            raise ValueError(
                f"expected {1 << len(names)} values for {len(names)} variables, got {arr.shape}"
            )
        if abs(arr[0] - 1.0) > config.TRANSFORM_TOL:
            raise ValueError(f"value of the empty conjunction must be 1, got {arr[0]!r}")
        arr = arr.copy()
        arr[0] = 1.0
        arr.setflags(write=False)
        object.__setattr__(self, "variables", names)
        object.__setattr__(self, "values", arr)

    @property
    def var_count(self) -> int:
        return len(self.variables)

    def mask_of(self, subset: Iterable[str]) -> int:
        mask = 0
        for name in subset:
            try:
                mask |= 1 << self.variables.index(name)
            except ValueError:
                raise UnknownVariable(f"variable {name!r} not in group") from None
        return mask

    def value(self, subset: Iterable[str]) -> float:
        return float(self.values[self.mask_of(subset)])

    def __repr__(self) -> str:
        return f"ConjunctionTable({list(self.variables)}, {self.values.tolist()})"


def _superset_sums(values: np.ndarray, m: int) -> np.ndarray:
    """In m passes, replace each entry S with the sum over all T >= S."""
    out = values.copy()
    n = 1 << m
    idx = np.arange(n)
    for k in range(m):
        bit = 1 << k
        low = idx[(idx & bit) == 0]
        out[low] += out[low | bit]
    return out


def _superset_diffs(values: np.ndarray, m: int) -> np.ndarray:
    """Inverse of _superset_sums (alternating-sign subset sums, same shape)."""
    out = values.copy()
    n = 1 << m
    idx = np.arange(n)
    for k in range(m):
        bit = 1 << k
        low = idx[(idx & bit) == 0]
        out[low] -= out[low | bit]
    return out


def zeta(cmd: Cmd) -> ConjunctionTable:
    """Conjunction table of a CMD: value(S) = sum of atoms containing S."""
    values = _superset_sums(cmd.atoms, cmd.var_count)
    values[0] = 1.0
    return ConjunctionTable(cmd.variables, values)


def moebius(table: ConjunctionTable) -> Cmd:
    """Invert a full conjunction table back to atom probabilities.

    A table no distribution can satisfy shows up as a significantly
    negative atom and raises InfeasibleConstraintSet; negatives within
    the structural tolerance are clamped to zero and renormalized away.
    """
    atoms = _superset_diffs(table.values, table.var_count)
    worst = float(atoms.min())
    if worst < -config.STRUCT_TOL:
        raise InfeasibleConstraintSet(
            f"conjunction table admits no distribution (atom mass {worst!r})"
        )
    atoms = np.where(atoms < 0.0, 0.0, atoms)
    return Cmd(table.variables, atoms / atoms.sum())


def conjunction_prob(cmd: Cmd, subset: Iterable[str]) -> float:
    """Pr(every variable in subset occurs); the empty subset gives 1."""
    # Routed through the same transform as zeta so the two agree exactly.
    subset = tuple(subset)
    if not subset:
        return 1.0
    return float(zeta(cmd).values[cmd.mask_of(subset)])


def sum_out(cmd: Cmd, keep: Iterable[str]) -> Cmd:
    """Marginalize onto `keep`, preserving the source's variable order."""
    keep_set = set(keep)
    if not keep_set:
        raise ValueError("keep must name at least one variable")
    for name in keep_set:
        if name not in cmd.variables:
            raise UnknownVariable(f"variable {name!r} not in group")
    kept = tuple(v for v in cmd.variables if v in keep_set)
    src_bits = [cmd.bit(v) for v in kept]
    n = 1 << cmd.var_count
    idx = np.arange(n)
    dest = np.zeros(n, dtype=np.int64)
    for out_bit, src_bit in enumerate(src_bits):
        dest |= ((idx >> src_bit) & 1) << out_bit
    atoms = np.bincount(dest, weights=cmd.atoms, minlength=1 << len(kept))
    return Cmd(kept, atoms)


def condition(cmd: Cmd, assignment: Mapping[str, bool]) -> Cmd:
    """Condition on certain occur/not-occur observations of some variables.

    Raises ImpossibleEvidence when the consistent atoms carry
    (numerically) zero mass.
    """
    ones = 0
    cares = 0
    for name, observed in assignment.items():
        bit = 1 << cmd.bit(name)
        cares |= bit
        if observed:
            ones |= bit
    idx = np.arange(1 << cmd.var_count)
    consistent = (idx & cares) == ones
    mass = float(cmd.atoms[consistent].sum())
    if mass < config.ZERO_MASS:
        raise ImpossibleEvidence(
            f"evidence {dict(assignment)!r} has zero prior probability"
        )
    atoms = np.where(consistent, cmd.atoms, 0.0) / mass
    return Cmd(cmd.variables, atoms)


def entropy(cmd: Cmd) -> float:
    """Shannon entropy in nats; zero-probability atoms contribute nothing."""
    p = cmd.atoms[cmd.atoms > 0.0]
    return float(-(p * np.log(p)).sum()) if p.size else 0.0


def atom_label(mask: AtomIndex, m: int) -> str:
    """Bit pattern with the highest declared variable leftmost, e.g. '101'."""
    return format(mask, f"0{m}b")
