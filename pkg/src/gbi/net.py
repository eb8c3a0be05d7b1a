"""Local event groups, structural relations, and the net that ties them.

A net is valid when its intersection graph (one node per LEG, one edge
per pair with a nonempty shared variable set) is a forest and every
variable's LEGs induce a connected piece of it.  Propagation is only
defined over valid nets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Union

import numpy as np

from . import config
from .dist import Cmd

VariableKind = Literal["evidence", "hypothesis", "goal"]

VARIABLE_KINDS = ("evidence", "hypothesis", "goal")


@dataclass(frozen=True)
class Variable:
    id: str
    name: str
    kind: VariableKind
    is_bev: bool = False


@dataclass(frozen=True, eq=False)
class Leg:
    """An ordered variable group; the order fixes atom-index bit positions."""

    id: str
    name: str
    variables: tuple[str, ...]
    cmd: Cmd | None = None

    def __init__(self, id: str, name: str, variables: Iterable[str], cmd: Cmd | None = None):
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "variables", tuple(variables))
        object.__setattr__(self, "cmd", cmd)

    def with_cmd(self, cmd: Cmd | None) -> "Leg":
        return Leg(self.id, self.name, self.variables, cmd)

    def __eq__(self, other):
        if not isinstance(other, Leg):
            return NotImplemented
        if (self.id, self.name, self.variables) != (other.id, other.name, other.variables):
            return False
        if self.cmd is None or other.cmd is None:
            return self.cmd is other.cmd
        return self.cmd.variables == other.cmd.variables and bool(
            np.array_equal(self.cmd.atoms, other.cmd.atoms)
        )

    def __hash__(self):
        return hash((self.id, self.name, self.variables))


@dataclass(frozen=True)
class Forbidden:
    """The two variables can never occur together."""

    a: str
    b: str

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class Cutoff:
    """dependent can only occur when prerequisite occurs."""

    dependent: str
    prerequisite: str


StructuralRelation = Union[Forbidden, Cutoff]


def relation_variables(relation: StructuralRelation) -> tuple[str, str]:
    if isinstance(relation, Forbidden):
        return (relation.a, relation.b)
    return (relation.dependent, relation.prerequisite)


@dataclass(frozen=True, eq=False)
class LegNet:
    variables: tuple[Variable, ...]
    legs: tuple[Leg, ...]
    relations: tuple[StructuralRelation, ...] = field(default_factory=tuple)

    def __init__(self, variables, legs, relations=()):
        object.__setattr__(self, "variables", tuple(variables))
        object.__setattr__(self, "legs", tuple(legs))
        object.__setattr__(self, "relations", tuple(relations))

    def variable_map(self) -> dict[str, Variable]:
        return {v.id: v for v in self.variables}

    def leg_map(self) -> dict[str, Leg]:
        return {leg.id: leg for leg in self.legs}

    def host_leg(self, variable_id: str) -> Leg | None:
        """First declared LEG containing the variable."""
        for leg in self.legs:
            if variable_id in leg.variables:
                return leg
        return None

    def legs_of(self, variable_id: str) -> list[Leg]:
        return [leg for leg in self.legs if variable_id in leg.variables]

    def leg_relations(self, leg: Leg) -> tuple[StructuralRelation, ...]:
        """Relations whose variables both reside in the given LEG."""
        members = set(leg.variables)
        return tuple(
            r for r in self.relations if set(relation_variables(r)) <= members
        )

    def with_cmds(self, cmds: dict[str, Cmd]) -> "LegNet":
        legs = tuple(
            leg.with_cmd(cmds[leg.id]) if leg.id in cmds else leg for leg in self.legs
        )
        return LegNet(self.variables, legs, self.relations)


def compute_intersections(net: LegNet) -> dict[tuple[str, str], tuple[str, ...]]:
    """Shared variable set per LEG pair, in declaration order; empty pairs omitted."""
    out: dict[tuple[str, str], tuple[str, ...]] = {}
    for i, a in enumerate(net.legs):
        for b in net.legs[i + 1 :]:
            shared = tuple(v for v in a.variables if v in set(b.variables))
            if shared:
                out[(a.id, b.id)] = shared
    return out


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def _forest_check(leg_ids: list[str], edges: Iterable[tuple[str, str]]) -> bool:
    """True when the undirected graph has no cycle (union-find)."""
    parent = {x: x for x in leg_ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def validate(net: LegNet) -> ValidationReport:
    """Collect every structural violation; an empty report means propagation is safe."""
    violations: list[Violation] = []
    seen_ids: set[str] = set()
    seen_names: set[str] = set()
    for v in net.variables:
        if v.id in seen_ids:
            violations.append(Violation("DuplicateVariable", v.id, "variable id declared twice"))
        seen_ids.add(v.id)
        if v.name in seen_names:
            violations.append(Violation("DuplicateVariable", v.name, "variable name declared twice"))
        seen_names.add(v.name)
        if v.kind not in VARIABLE_KINDS:
            violations.append(Violation("UnknownKind", v.id, f"kind {v.kind!r} is not recognized"))
        if v.is_bev and v.kind != "evidence":
            violations.append(
                Violation("BevKindMismatch", v.id, "binary evidence variables must have kind 'evidence'")
            )

    known = {v.id for v in net.variables}
    seen_leg_ids: set[str] = set()
    for leg in net.legs:
        if leg.id in seen_leg_ids:
            violations.append(Violation("DuplicateLeg", leg.id, "LEG id declared twice"))
        seen_leg_ids.add(leg.id)
        if not leg.variables:
            violations.append(Violation("EmptyLeg", leg.id, "LEG declares no variables"))
        if len(set(leg.variables)) != len(leg.variables):
            violations.append(Violation("DuplicateVariable", leg.id, "variable repeated within LEG"))
        if len(leg.variables) > config.MAX_LEG_VARS:
            violations.append(
                Violation(
                    "LegTooLarge",
                    leg.id,
                    f"{len(leg.variables)} variables exceed the cap of {config.MAX_LEG_VARS}",
                )
            )
        for vid in leg.variables:
            if vid not in known:
                violations.append(Violation("UnknownVariable", leg.id, f"LEG references undeclared {vid!r}"))

    intersections = compute_intersections(net)
    leg_ids = [leg.id for leg in net.legs]
    if not _forest_check(leg_ids, intersections.keys()):
        violations.append(
            Violation("CyclicNet", "net", "intersection graph contains a cycle")
        )

    # With edges on every intersecting pair, a variable's LEGs always form a
    # clique, so a disconnected residence can only come from a malformed graph;
    # checked anyway so hand-built nets fail loudly.
    adjacency: dict[str, set[str]] = {x: set() for x in leg_ids}
    for a, b in intersections:
        adjacency[a].add(b)
        adjacency[b].add(a)
    for v in net.variables:
        residents = [leg.id for leg in net.legs_of(v.id)]
        if len(residents) > 1:
            stack = [residents[0]]
            reached = {residents[0]}
            member = set(residents)
            while stack:
                cur = stack.pop()
                for nxt in adjacency[cur]:
                    if nxt in member and nxt not in reached:
                        reached.add(nxt)
                        stack.append(nxt)
            if reached != member:
                violations.append(
                    Violation(
                        "DisconnectedSharedVariable",
                        v.id,
                        "LEGs containing the variable do not form a connected subtree",
                    )
                )

    for r in net.relations:
        a, b = relation_variables(r)
        for vid in (a, b):
            if vid not in known:
                violations.append(Violation("UnknownVariable", vid, "relation references undeclared variable"))
        if a == b:
            violations.append(Violation("DanglingRelation", a, "relation pairs a variable with itself"))
            continue
        if a in known and b in known:
            together = any(
                a in leg.variables and b in leg.variables for leg in net.legs
            )
            if not together:
                violations.append(
                    Violation(
                        "DanglingRelation",
                        f"{a}/{b}",
                        "related variables never share a LEG, so the relation cannot bind",
                    )
                )

    return ValidationReport(tuple(violations))


def storage_footprint(net: LegNet) -> tuple[int, int]:
    """(total CMD entries across LEGs, entries a single joint over all variables would need)."""
    dense = sum(1 << len(leg.variables) for leg in net.legs)
    return dense, 1 << len(net.variables)
