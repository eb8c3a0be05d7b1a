"""Versioned storage for knowledge bases and consultation sessions.

Documents are JSON with a fixed field order, probabilities written with
17 significant digits (enough for an exact double round trip), unknown
fields rejected with the offending path, and a format_version gate.
Cached CMDs are advisory: strict readers rebuild and compare.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from . import config
from .dist import Cmd
from .elicit import (
    ConditionalEntry,
    ConstraintKey,
    ConstraintRecord,
    ElicitationState,
    build_cmd,
    state_from_records,
)
from .errors import SchemaError, UnknownVariable, UnsupportedVersion
from .infer import EvidenceAssertion, Session, UpdateStep, assert_evidence, marginal, open_session
from .net import Cutoff, Forbidden, Leg, LegNet, StructuralRelation, Variable

FORMAT_VERSION = 1


@dataclass(frozen=True)
class KbDocument:
    name: str
    description: str
    variables: tuple[Variable, ...]
    legs: tuple[Leg, ...]
    relations: tuple[StructuralRelation, ...]
    constraints: tuple[ConstraintRecord, ...]
    cmds: dict[str, tuple[float, ...]]
    format_version: int = FORMAT_VERSION


@dataclass(frozen=True)
class SessionDocument:
    kb_path: str
    evidence: tuple[EvidenceAssertion, ...]
    trace: tuple[UpdateStep, ...]
    final_marginals: dict[str, float]
    format_version: int = FORMAT_VERSION


# ------------------------------------------------------------- writing


def _format_number(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    value = float(x)
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"cannot serialize {value!r}")
    return format(value, ".17g")


def _is_scalar(x: Any) -> bool:
    return x is None or isinstance(x, (bool, int, float, str))


def _scalar(x: Any) -> str:
    if x is None:
        return "null"
    if isinstance(x, str):
        return json.dumps(x)
    return _format_number(x)


def _dumps(node: Any, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if _is_scalar(node):
        return _scalar(node)
    if isinstance(node, (list, tuple)):
        items = list(node)
        if not items:
            return "[]"
        if all(_is_scalar(item) for item in items):
            return "[" + ", ".join(_scalar(item) for item in items) + "]"
        body = ",\n".join(inner + _dumps(item, indent + 1) for item in items)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(node, dict):
        if not node:
            return "{}"
        body = ",\n".join(
            f"{inner}{json.dumps(str(key))}: {_dumps(value, indent + 1)}"
            for key, value in node.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(node).__name__}")


def _subset_in_leg_order(leg: Leg, subset) -> list[str]:
    members = set(subset)
    return [v for v in leg.variables if v in members]


def _kb_payload(doc: KbDocument) -> dict:
    leg_map = {leg.id: leg for leg in doc.legs}
    relations = []
    for r in doc.relations:
        if isinstance(r, Forbidden):
            relations.append({"kind": "forbidden", "a": r.a, "b": r.b})
        else:
            relations.append(
                {"kind": "cutoff", "dependent": r.dependent, "prerequisite": r.prerequisite}
            )
    constraints = []
    for record in doc.constraints:
        leg = leg_map[record.key.leg_id]
        constraints.append(
            {
                "leg": record.key.leg_id,
                "subset": _subset_in_leg_order(leg, record.key.subset),
                "value": float(record.value),
                "source": record.source,
                "entry_form": record.entry_form,
                "given": None
                if record.given is None
                else _subset_in_leg_order(leg, record.given),
                "given_value": record.given_value,
            }
        )
    return {
        "format_version": doc.format_version,
        "metadata": {"name": doc.name, "description": doc.description},
        "variables": [
            {"id": v.id, "name": v.name, "kind": v.kind, "is_bev": v.is_bev}
            for v in doc.variables
        ],
        "legs": [
            {"id": leg.id, "name": leg.name, "variables": list(leg.variables)}
            for leg in doc.legs
        ],
        "relations": relations,
        "constraints": constraints,
        "cmds": {leg_id: list(atoms) for leg_id, atoms in doc.cmds.items()},
    }


def serialize_kb(doc: KbDocument) -> str:
    return _dumps(_kb_payload(doc)) + "\n"


def assertion_payload(a: EvidenceAssertion) -> dict:
    return {"variable": a.variable, "observed": a.observed, "seq": a.seq, "batch": a.batch}


def step_payload(s: UpdateStep) -> dict:
    return {
        "seq": s.seq,
        "kind": s.kind,
        "source_leg": s.source_leg,
        "target_leg": s.target_leg,
        "shared": list(s.shared),
        "prior_marginal": list(s.prior_marginal),
        "posterior_marginal": list(s.posterior_marginal),
        "multipliers": list(s.multipliers),
        "drift": s.drift,
    }


def serialize_session(doc: SessionDocument) -> str:
    payload = {
        "format_version": doc.format_version,
        "kb_path": doc.kb_path,
        "evidence": [assertion_payload(a) for a in doc.evidence],
        "trace": [step_payload(s) for s in doc.trace],
        "final_marginals": dict(doc.final_marginals),
    }
    return _dumps(payload) + "\n"


# ------------------------------------------------------------- reading


def _need(node: dict, path: str, allowed: dict[str, bool]) -> None:
    for key in node:
        if key not in allowed:
            raise SchemaError("unknown field", f"{path}.{key}" if path else key)
    for key, required in allowed.items():
        if required and key not in node:
            raise SchemaError(f"missing field {key!r}", path or "document")


def _as_object(node: Any, path: str) -> dict:
    if not isinstance(node, dict):
        raise SchemaError("expected an object", path)
    return node


def _as_array(node: Any, path: str) -> list:
    if not isinstance(node, list):
        raise SchemaError("expected an array", path)
    return node


def _as_str(node: Any, path: str) -> str:
    if not isinstance(node, str):
        raise SchemaError("expected a string", path)
    return node


def _as_bool(node: Any, path: str) -> bool:
    if not isinstance(node, bool):
        raise SchemaError("expected a boolean", path)
    return node


def _as_int(node: Any, path: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise SchemaError("expected an integer", path)
    return node


def _as_number(node: Any, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise SchemaError("expected a number", path)
    return float(node)


def _as_probability(node: Any, path: str) -> float:
    value = _as_number(node, path)
    if not 0.0 <= value <= 1.0:
        raise SchemaError(f"probability {value!r} outside [0, 1]", path)
    return value


def _check_version(node: dict, path: str) -> int:
    if "format_version" not in node:
        raise SchemaError("missing field 'format_version'", path or "document")
    version = _as_int(node["format_version"], "format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(
            f"format_version {version} is not supported (this build reads {FORMAT_VERSION})"
        )
    return version


def parse_kb(text: str) -> KbDocument:
    try:
        root = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc.msg}", f"line {exc.lineno}") from None
    root = _as_object(root, "document")
    _check_version(root, "")
    _need(
        root,
        "",
        {
            "format_version": True,
            "metadata": True,
            "variables": True,
            "legs": True,
            "relations": True,
            "constraints": True,
            "cmds": True,
        },
    )
    meta = _as_object(root["metadata"], "metadata")
    _need(meta, "metadata", {"name": True, "description": True})
    name = _as_str(meta["name"], "metadata.name")
    description = _as_str(meta["description"], "metadata.description")

    variables = []
    for i, node in enumerate(_as_array(root["variables"], "variables")):
        path = f"variables[{i}]"
        node = _as_object(node, path)
        _need(node, path, {"id": True, "name": True, "kind": True, "is_bev": True})
        kind = _as_str(node["kind"], f"{path}.kind")
        if kind not in ("evidence", "hypothesis", "goal"):
            raise SchemaError(f"unknown kind {kind!r}", f"{path}.kind")
        variables.append(
            Variable(
                id=_as_str(node["id"], f"{path}.id"),
                name=_as_str(node["name"], f"{path}.name"),
                kind=kind,
                is_bev=_as_bool(node["is_bev"], f"{path}.is_bev"),
            )
        )

    legs = []
    for i, node in enumerate(_as_array(root["legs"], "legs")):
        path = f"legs[{i}]"
        node = _as_object(node, path)
        _need(node, path, {"id": True, "name": True, "variables": True})
        members = [
            _as_str(v, f"{path}.variables[{j}]")
            for j, v in enumerate(_as_array(node["variables"], f"{path}.variables"))
        ]
        legs.append(
            Leg(
                id=_as_str(node["id"], f"{path}.id"),
                name=_as_str(node["name"], f"{path}.name"),
                variables=members,
            )
        )
    leg_map = {leg.id: leg for leg in legs}

    relations: list[StructuralRelation] = []
    for i, node in enumerate(_as_array(root["relations"], "relations")):
        path = f"relations[{i}]"
        node = _as_object(node, path)
        kind = _as_str(node.get("kind"), f"{path}.kind") if "kind" in node else None
        if kind == "forbidden":
            _need(node, path, {"kind": True, "a": True, "b": True})
            relations.append(
                Forbidden(_as_str(node["a"], f"{path}.a"), _as_str(node["b"], f"{path}.b"))
            )
        elif kind == "cutoff":
            _need(node, path, {"kind": True, "dependent": True, "prerequisite": True})
            relations.append(
                Cutoff(
                    _as_str(node["dependent"], f"{path}.dependent"),
                    _as_str(node["prerequisite"], f"{path}.prerequisite"),
                )
            )
        else:
            raise SchemaError(f"unknown relation kind {kind!r}", f"{path}.kind")

    constraints = []
    for i, node in enumerate(_as_array(root["constraints"], "constraints")):
        path = f"constraints[{i}]"
        node = _as_object(node, path)
        _need(
            node,
            path,
            {
                "leg": True,
                "subset": True,
                "value": True,
                "source": True,
                "entry_form": True,
                "given": True,
                "given_value": True,
            },
        )
        leg_id = _as_str(node["leg"], f"{path}.leg")
        if leg_id not in leg_map:
            raise SchemaError(f"unknown LEG {leg_id!r}", f"{path}.leg")
        leg = leg_map[leg_id]
        subset = []
        for j, v in enumerate(_as_array(node["subset"], f"{path}.subset")):
            vid = _as_str(v, f"{path}.subset[{j}]")
            if vid not in leg.variables:
                raise SchemaError(
                    f"variable {vid!r} is not in LEG {leg_id!r}", f"{path}.subset[{j}]"
                )
            subset.append(vid)
        source = _as_str(node["source"], f"{path}.source")
        if source not in ("user-specified", "defaulted", "forced-zero", "derived-from-cutoff"):
            raise SchemaError(f"unknown source {source!r}", f"{path}.source")
        entry_form = _as_str(node["entry_form"], f"{path}.entry_form")
        if entry_form not in ("joint", "conditional"):
            raise SchemaError(f"unknown entry form {entry_form!r}", f"{path}.entry_form")
        given = None
        if node["given"] is not None:
            given_list = []
            for j, v in enumerate(_as_array(node["given"], f"{path}.given")):
                vid = _as_str(v, f"{path}.given[{j}]")
                if vid not in leg.variables:
                    raise SchemaError(
                        f"variable {vid!r} is not in LEG {leg_id!r}", f"{path}.given[{j}]"
                    )
                given_list.append(vid)
            given = frozenset(given_list)
        given_value = (
            None
            if node["given_value"] is None
            else _as_probability(node["given_value"], f"{path}.given_value")
        )
        if entry_form == "conditional" and (given is None or given_value is None):
            raise SchemaError("conditional entry needs given and given_value", path)
        constraints.append(
            ConstraintRecord(
                key=ConstraintKey(leg_id, subset),
                value=_as_probability(node["value"], f"{path}.value"),
                source=source,
                entry_form=entry_form,
                given=given,
                given_value=given_value,
            )
        )

    cmds: dict[str, tuple[float, ...]] = {}
    cmd_node = _as_object(root["cmds"], "cmds")
    for leg_id, atoms in cmd_node.items():
        path = f"cmds.{leg_id}"
        if leg_id not in leg_map:
            raise SchemaError(f"unknown LEG {leg_id!r}", path)
        arr = _as_array(atoms, path)
        expected = 1 << len(leg_map[leg_id].variables)
        if len(arr) != expected:
            raise SchemaError(f"expected {expected} atoms, got {len(arr)}", path)
        cmds[leg_id] = tuple(
            _as_probability(x, f"{path}[{j}]") for j, x in enumerate(arr)
        )

    return KbDocument(
        name=name,
        description=description,
        variables=tuple(variables),
        legs=tuple(legs),
        relations=tuple(relations),
        constraints=tuple(constraints),
        cmds=cmds,
    )


def parse_session(text: str) -> SessionDocument:
    try:
        root = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc.msg}", f"line {exc.lineno}") from None
    root = _as_object(root, "document")
    _check_version(root, "")
    _need(
        root,
        "",
        {
            "format_version": True,
            "kb_path": True,
            "evidence": True,
            "trace": True,
            "final_marginals": True,
        },
    )
    evidence = []
    for i, node in enumerate(_as_array(root["evidence"], "evidence")):
        path = f"evidence[{i}]"
        node = _as_object(node, path)
        _need(node, path, {"variable": True, "observed": True, "seq": True, "batch": True})
        evidence.append(
            EvidenceAssertion(
                variable=_as_str(node["variable"], f"{path}.variable"),
                observed=_as_bool(node["observed"], f"{path}.observed"),
                seq=_as_int(node["seq"], f"{path}.seq"),
                batch=_as_int(node["batch"], f"{path}.batch"),
            )
        )
    trace = []
    for i, node in enumerate(_as_array(root["trace"], "trace")):
        path = f"trace[{i}]"
        node = _as_object(node, path)
        _need(
            node,
            path,
            {
                "seq": True,
                "kind": True,
                "source_leg": True,
                "target_leg": True,
                "shared": True,
                "prior_marginal": True,
                "posterior_marginal": True,
                "multipliers": True,
                "drift": True,
            },
        )
        kind = _as_str(node["kind"], f"{path}.kind")
        if kind not in ("evidence", "propagation"):
            raise SchemaError(f"unknown step kind {kind!r}", f"{path}.kind")
        trace.append(
            UpdateStep(
                seq=_as_int(node["seq"], f"{path}.seq"),
                kind=kind,
                source_leg=_as_str(node["source_leg"], f"{path}.source_leg"),
                target_leg=_as_str(node["target_leg"], f"{path}.target_leg"),
                shared=tuple(
                    _as_str(v, f"{path}.shared[{j}]")
                    for j, v in enumerate(_as_array(node["shared"], f"{path}.shared"))
                ),
                prior_marginal=tuple(
                    _as_number(v, f"{path}.prior_marginal[{j}]")
                    for j, v in enumerate(
                        _as_array(node["prior_marginal"], f"{path}.prior_marginal")
                    )
                ),
                posterior_marginal=tuple(
                    _as_number(v, f"{path}.posterior_marginal[{j}]")
                    for j, v in enumerate(
                        _as_array(node["posterior_marginal"], f"{path}.posterior_marginal")
                    )
                ),
                multipliers=tuple(
                    _as_number(v, f"{path}.multipliers[{j}]")
                    for j, v in enumerate(_as_array(node["multipliers"], f"{path}.multipliers"))
                ),
                drift=_as_number(node["drift"], f"{path}.drift"),
            )
        )
    marginals_node = _as_object(root["final_marginals"], "final_marginals")
    final_marginals = {
        key: _as_probability(value, f"final_marginals.{key}")
        for key, value in marginals_node.items()
    }
    return SessionDocument(
        kb_path=_as_str(root["kb_path"], "kb_path"),
        evidence=tuple(evidence),
        trace=tuple(trace),
        final_marginals=final_marginals,
    )


# ------------------------------------------------------------- operations


def resolve_variable(doc: KbDocument, token: str) -> str:
    """Map a user-facing token (id or display name, any case) to a variable id."""
    for v in doc.variables:
        if token in (v.id, v.name):
            return v.id
    lowered = token.lower()
    for v in doc.variables:
        if lowered in (v.id.lower(), v.name.lower()):
            return v.id
    raise UnknownVariable(f"unknown variable {token!r}")


def resolve_leg(doc: KbDocument, token: str) -> str:
    for leg in doc.legs:
        if token in (leg.id, leg.name) or token.lower() in (leg.id.lower(), leg.name.lower()):
            return leg.id
    raise UnknownVariable(f"unknown LEG {token!r}")


def elicitation_states(doc: KbDocument) -> dict[str, ElicitationState]:
    """Replay each LEG's stored records, revalidating them in sequence."""
    net = net_from_document(doc, include_cmds=False)
    states = {}
    for leg in net.legs:
        records = [r for r in doc.constraints if r.key.leg_id == leg.id]
        states[leg.id] = state_from_records(leg, net.leg_relations(leg), records)
    return states


def net_from_document(doc: KbDocument, include_cmds: bool = True) -> LegNet:
    legs = []
    for leg in doc.legs:
        if include_cmds and leg.id in doc.cmds:
            legs.append(leg.with_cmd(Cmd(leg.variables, doc.cmds[leg.id])))
        else:
            legs.append(leg)
    return LegNet(doc.variables, legs, doc.relations)


def build_document(
    doc: KbDocument, max_order: int | Literal["all"] | None = None
) -> KbDocument:
    """Build every LEG's CMD from its records plus minimum-information defaults."""
    states = elicitation_states(doc)
    cmds = {
        leg.id: tuple(float(x) for x in build_cmd(states[leg.id], max_order).atoms)
        for leg in doc.legs
    }
    return KbDocument(
        name=doc.name,
        description=doc.description,
        variables=doc.variables,
        legs=doc.legs,
        relations=doc.relations,
        constraints=doc.constraints,
        cmds=cmds,
    )


def verify_cache(doc: KbDocument) -> list[str]:
    """Compare cached CMDs against a fresh rebuild; returns human-readable problems."""
    problems = []
    if not doc.cmds:
        return ["no cached CMDs to verify"]
    rebuilt = build_document(doc)
    for leg in doc.legs:
        if leg.id not in doc.cmds:
            problems.append(f"LEG {leg.id!r} has no cached CMD")
            continue
        gap = float(
            np.max(np.abs(np.array(doc.cmds[leg.id]) - np.array(rebuilt.cmds[leg.id])))
        )
        if gap > config.STRUCT_TOL:
            problems.append(f"cached CMD for LEG {leg.id!r} is off a rebuild by {gap:.3g}")
    return problems


def open_document_session(doc: KbDocument) -> Session:
    net = net_from_document(doc)
    return open_session(net)


def session_document(session: Session, kb_path: str) -> SessionDocument:
    final = {v.id: marginal(session, v.id) for v in session.net.variables}
    return SessionDocument(
        kb_path=kb_path,
        evidence=session.evidence,
        trace=session.trace,
        final_marginals=final,
    )


def replay_session(sdoc: SessionDocument, kb: KbDocument) -> Session:
    """Re-run the evidence log batch by batch over the KB's built net."""
    session = open_document_session(kb)
    batches: dict[int, list[tuple[str, bool]]] = {}
    for a in sorted(sdoc.evidence, key=lambda a: a.seq):
        batches.setdefault(a.batch, []).append((a.variable, a.observed))
    for batch in sorted(batches):
        session = assert_evidence(session, batches[batch])
    return session
