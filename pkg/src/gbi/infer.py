"""Evidence assertion and belief propagation over a LEG net.

Updating follows the generalized rule: when a source LEG's distribution
changes, each neighbor atom is scaled by the ratio of new to old
probability of its restriction to the shared variable set.  Because the
net's intersection graph is a forest, one breadth-first wave from the
changed LEG restores consistency everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from . import config
from .dist import Cmd, condition
from .errors import (
    ConflictingEvidence,
    ConsistencyError,
    ImpossibleEvidence,
    InvalidNet,
    NotEvidenceVariable,
    UnknownVariable,
)
from .net import Leg, LegNet, compute_intersections, validate


@dataclass(frozen=True)
class EvidenceAssertion:
    variable: str
    observed: bool
    seq: int = 0
    batch: int = 0


@dataclass(frozen=True)
class UpdateStep:
    """One application of the updating rule, kept for the session trace."""

    seq: int
    kind: Literal["evidence", "propagation"]
    source_leg: str
    target_leg: str
    shared: tuple[str, ...]
    prior_marginal: tuple[float, ...]
    posterior_marginal: tuple[float, ...]
    multipliers: tuple[float, ...]
    drift: float = 0.0

    @property
    def healthy(self) -> bool:
        return self.drift <= config.DRIFT_WARN


@dataclass(frozen=True, eq=False)
class Session:
    """Immutable consultation state: base net plus the evolving posterior CMDs."""

    net: LegNet
    current: dict[str, Cmd]
    evidence: tuple[EvidenceAssertion, ...] = ()
    trace: tuple[UpdateStep, ...] = ()

    def __init__(self, net, current, evidence=(), trace=()):
        object.__setattr__(self, "net", net)
        object.__setattr__(self, "current", dict(current))
        object.__setattr__(self, "evidence", tuple(evidence))
        object.__setattr__(self, "trace", tuple(trace))

    def asserted(self) -> dict[str, bool]:
        return {a.variable: a.observed for a in self.evidence}


def _marginal_vector(cmd: Cmd, shared: Sequence[str]) -> np.ndarray:
    """Distribution over shared-set assignments; bit j of the index = shared[j] occurs."""
    bits = [cmd.bit(v) for v in shared]
    n = 1 << cmd.var_count
    idx = np.arange(n)
    dest = np.zeros(n, dtype=np.int64)
    for out_bit, src_bit in enumerate(bits):
        dest |= ((idx >> src_bit) & 1) << out_bit
    return np.bincount(dest, weights=cmd.atoms, minlength=1 << len(bits))


def _shared_order(target: Cmd, shared: Iterable[str]) -> tuple[str, ...]:
    wanted = set(shared)
    return tuple(v for v in target.variables if v in wanted)


def _update_detail(
    target: Cmd,
    prior_source: Cmd,
    post_source: Cmd,
    shared: Iterable[str],
) -> tuple[Cmd, dict]:
    if prior_source.variables != post_source.variables:
        raise ValueError("prior and posterior source must cover the same variables")
    order = _shared_order(target, shared)
    if not order:
        raise ValueError("shared variable set must be nonempty")
    prior_marg = _marginal_vector(prior_source, order)
    post_marg = _marginal_vector(post_source, order)
    target_marg = _marginal_vector(target, order)
    gap = float(np.max(np.abs(target_marg - prior_marg)))
    if gap > config.STRUCT_TOL:
        raise ConsistencyError(
            f"target and prior source disagree on {order!r} by {gap:.3g}"
        )

    ratios = np.zeros_like(prior_marg)
    for i in range(prior_marg.size):
        prior = float(prior_marg[i])
        post = float(post_marg[i])
        if prior < config.ZERO_MASS:
            if post > 1e-9:
                raise ImpossibleEvidence(
                    "posterior places mass on a shared assignment with zero prior"
                )
            ratios[i] = 0.0
        else:
            ratios[i] = post / prior

    bits = [target.bit(v) for v in order]
    n = 1 << target.var_count
    idx = np.arange(n)
    cell = np.zeros(n, dtype=np.int64)
    for out_bit, src_bit in enumerate(bits):
        cell |= ((idx >> src_bit) & 1) << out_bit
    raw = target.atoms * ratios[cell]
    total = float(raw.sum())
    drift = abs(total - 1.0)
    if total <= 0.0:
        raise ImpossibleEvidence("update removes all probability mass from the target")
    updated = Cmd(target.variables, raw / total)
    multipliers = np.where(target.atoms > 0.0, ratios[cell] / total, 0.0)
    detail = {
        "shared": order,
        "prior_marginal": tuple(float(x) for x in prior_marg),
        "posterior_marginal": tuple(float(x) for x in post_marg),
        "multipliers": tuple(float(x) for x in multipliers),
        "drift": drift,
    }
    return updated, detail


def gbi_update(
    target: Cmd,
    prior_source: Cmd,
    post_source: Cmd,
    shared: Iterable[str],
) -> Cmd:
    """Scale target atoms by posterior/prior shared-marginal ratios, then renormalize.

    Assignments with zero prior and zero posterior contribute a zero
    multiplier; zero prior with real posterior mass is impossible
    evidence.  The target must agree with the prior source on the shared
    marginal before updating.
    """
    updated, _ = _update_detail(target, prior_source, post_source, shared)
    return updated


def open_session(net: LegNet) -> Session:
    """Start a consultation over a built, valid, mutually consistent net."""
    report = validate(net)
    if not report.ok:
        raise InvalidNet(
            "net failed validation: " + "; ".join(v.code for v in report.violations),
            report,
        )
    current: dict[str, Cmd] = {}
    for leg in net.legs:
        if leg.cmd is None:
            raise InvalidNet(f"LEG {leg.id!r} has no built CMD", report)
        current[leg.id] = leg.cmd
    session = Session(net, current)
    consistency = check_consistency(net, current)
    if not consistency.ok:
        raise ConsistencyError(
            f"priors disagree on shared sets by {consistency.max_discrepancy:.3g}"
        )
    return session


def _adjacency(net: LegNet) -> dict[str, list[tuple[str, tuple[str, ...]]]]:
    adj: dict[str, list[tuple[str, tuple[str, ...]]]] = {leg.id: [] for leg in net.legs}
    for (a, b), shared in compute_intersections(net).items():
        adj[a].append((b, shared))
        adj[b].append((a, shared))
    order = {leg.id: i for i, leg in enumerate(net.legs)}
    for key in adj:
        adj[key].sort(key=lambda item: order[item[0]])
    return adj


def _propagate(
    net: LegNet,
    current: Mapping[str, Cmd],
    origin: str,
    origin_new: Cmd,
    seq_start: int,
    origin_step: UpdateStep,
) -> tuple[dict[str, Cmd], list[UpdateStep]]:
    """Breadth-first wave outward from the origin; returns updated CMDs and steps."""
    adj = _adjacency(net)
    snapshot = dict(current)
    updated: dict[str, Cmd] = {origin: origin_new}
    steps = [origin_step]
    seq = seq_start
    frontier = [origin]
    visited = {origin}
    while frontier:
        next_frontier: list[str] = []
        for source in frontier:
            for neighbor, shared in adj[source]:
                if neighbor in visited:
                    continue
                visited.add(neighbor)
                new_cmd, detail = _update_detail(
                    snapshot[neighbor], snapshot[source], updated[source], shared
                )
                updated[neighbor] = new_cmd
                seq += 1
                steps.append(
                    UpdateStep(
                        seq=seq,
                        kind="propagation",
                        source_leg=source,
                        target_leg=neighbor,
                        shared=detail["shared"],
                        prior_marginal=detail["prior_marginal"],
                        posterior_marginal=detail["posterior_marginal"],
                        multipliers=detail["multipliers"],
                        drift=detail["drift"],
                    )
                )
                next_frontier.append(neighbor)
        frontier = next_frontier
    merged = dict(snapshot)
    merged.update(updated)
    return merged, steps


def assert_evidence(
    session: Session,
    assertions: Mapping[str, bool] | Iterable[tuple[str, bool]],
) -> Session:
    """Fold certain observations of evidence variables into the session.

    Assertions are grouped by host LEG (multi-LEG batches run as
    sequential single-LEG updates in variable declaration order); each
    group conditions its host CMD and propagates outward.  Re-asserting
    a recorded value is a no-op; contradicting one raises.
    """
    items = list(assertions.items()) if isinstance(assertions, Mapping) else list(assertions)
    variables = session.net.variable_map()
    recorded = session.asserted()

    cleaned: dict[str, bool] = {}
    for name, observed in items:
        if name not in variables:
            raise UnknownVariable(f"variable {name!r} not in net")
        if not variables[name].is_bev:
            raise NotEvidenceVariable(f"{name!r} is not a binary evidence variable")
        observed = bool(observed)
        if name in cleaned and cleaned[name] != observed:
            raise ConflictingEvidence(f"{name!r} asserted both ways in one batch")
        if name in recorded:
            if recorded[name] != observed:
                raise ConflictingEvidence(
                    f"{name!r} already asserted as {recorded[name]}"
                )
            continue
        cleaned[name] = observed

    if not cleaned:
        return session

    decl_order = {v.id: i for i, v in enumerate(session.net.variables)}
    ordered = sorted(cleaned.items(), key=lambda item: decl_order[item[0]])
    groups: dict[str, dict[str, bool]] = {}
    for name, observed in ordered:
        host = session.net.host_leg(name)
        if host is None:
            raise UnknownVariable(f"variable {name!r} belongs to no LEG")
        groups.setdefault(host.id, {})[name] = observed

    current = dict(session.current)
    trace = list(session.trace)
    evidence = list(session.evidence)
    batch = (evidence[-1].batch + 1) if evidence else 1
    seq = evidence[-1].seq if evidence else 0

    for host_id, assignment in groups.items():
        host_cmd = current[host_id]
        conditioned = condition(host_cmd, assignment)
        shared = tuple(v for v in host_cmd.variables if v in assignment)
        prior_marg = _marginal_vector(host_cmd, shared)
        post_marg = _marginal_vector(conditioned, shared)
        ratios = np.array(
            [
                (float(post_marg[i]) / float(prior_marg[i])) if prior_marg[i] > 0.0 else 0.0
                for i in range(prior_marg.size)
            ]
        )
        bits = [host_cmd.bit(v) for v in shared]
        idx = np.arange(1 << host_cmd.var_count)
        cellmap = np.zeros(idx.size, dtype=np.int64)
        for out_bit, src_bit in enumerate(bits):
            cellmap |= ((idx >> src_bit) & 1) << out_bit
        step_seq = (trace[-1].seq + 1) if trace else 1
        origin_step = UpdateStep(
            seq=step_seq,
            kind="evidence",
            source_leg=host_id,
            target_leg=host_id,
            shared=shared,
            prior_marginal=tuple(float(x) for x in prior_marg),
            posterior_marginal=tuple(float(x) for x in post_marg),
            multipliers=tuple(float(x) for x in ratios[cellmap]),
            drift=0.0,
        )
        current, steps = _propagate(
            session.net, current, host_id, conditioned, step_seq, origin_step
        )
        trace.extend(steps)
        for name, observed in assignment.items():
            seq += 1
            evidence.append(EvidenceAssertion(name, observed, seq=seq, batch=batch))

    updated = Session(session.net, current, evidence, trace)
    consistency = check_consistency(session.net, updated.current)
    if not consistency.ok:
        raise ConsistencyError(
            f"propagation left shared sets apart by {consistency.max_discrepancy:.3g}"
        )
    return updated


@dataclass(frozen=True)
class EdgeCheck:
    leg_a: str
    leg_b: str
    shared: tuple[str, ...]
    discrepancy: float


@dataclass(frozen=True)
class ConsistencyReport:
    edges: tuple[EdgeCheck, ...]
    tol: float

    @property
    def max_discrepancy(self) -> float:
        return max((e.discrepancy for e in self.edges), default=0.0)

    @property
    def ok(self) -> bool:
        return self.max_discrepancy <= self.tol


def check_consistency(
    net: LegNet,
    cmds: Mapping[str, Cmd] | None = None,
    tol: float = config.STRUCT_TOL,
) -> ConsistencyReport:
    """Largest disagreement between the two marginals over every shared set."""
    table = dict(cmds) if cmds is not None else {
        leg.id: leg.cmd for leg in net.legs if leg.cmd is not None
    }
    edges = []
    for (a, b), shared in compute_intersections(net).items():
        if a not in table or b not in table:
            continue
        ma = _marginal_vector(table[a], shared)
        mb = _marginal_vector(table[b], shared)
        edges.append(EdgeCheck(a, b, shared, float(np.max(np.abs(ma - mb)))))
    return ConsistencyReport(tuple(edges), tol)


def marginal(session: Session, variable: str) -> float:
    """Current Pr(variable occurs), read from its host LEG."""
    host = session.net.host_leg(variable)
    if host is None:
        raise UnknownVariable(f"variable {variable!r} not in net")
    cmd = session.current[host.id]
    vec = _marginal_vector(cmd, (variable,))
    return float(vec[1])


def rank_evidence(
    session: Session,
    direction: Literal["most-likely", "least-likely"] = "most-likely",
) -> list[tuple[str, float]]:
    """Unasserted evidence variables ordered by current marginal; ties by name."""
    if direction not in ("most-likely", "least-likely"):
        raise ValueError(f"unknown ranking direction {direction!r}")
    done = set(session.asserted())
    rows = [
        (v.id, marginal(session, v.id))
        for v in session.net.variables
        if v.is_bev and v.id not in done and session.net.host_leg(v.id) is not None
    ]
    name_of = {v.id: v.name for v in session.net.variables}
    if direction == "most-likely":
        rows.sort(key=lambda row: (-row[1], name_of[row[0]]))
    else:
        rows.sort(key=lambda row: (row[1], name_of[row[0]]))
    return rows


def goal_report(session: Session) -> dict[str, float]:
    """Current marginal for every goal variable, in declaration order."""
    return {
        v.id: marginal(session, v.id)
        for v in session.net.variables
        if v.kind == "goal" and session.net.host_leg(v.id) is not None
    }
