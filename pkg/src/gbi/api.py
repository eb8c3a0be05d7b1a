"""HTTP service over the knowledge-base store, elicitation, and sessions.

JSON in and out, snake_case fields. Error bodies carry the raising error
type plus any structured detail (feasible interval, net violations).
Mutations to one KB or session are serialized behind per-resource locks;
reads work off immutable snapshots and never block.
"""

from __future__ import annotations

import itertools
import json
import re
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .elicit import (
    ConditionalEntry,
    accept_constraint,
    accept_default,
    feasible_interval,
    min_info_default,
    next_key,
    remaining_keys,
)
from .errors import (
    ConflictingEvidence,
    ConstraintOutOfRange,
    GbiError,
    InvalidNet,
    SchemaError,
    UnsupportedVersion,
)
from .infer import Session, assert_evidence, check_consistency, marginal, rank_evidence
from .kbdoc import (
    KbDocument,
    assertion_payload,
    build_document,
    elicitation_states,
    net_from_document,
    open_document_session,
    parse_kb,
    resolve_leg,
    resolve_variable,
    serialize_kb,
    step_payload,
)
from .net import compute_intersections, storage_footprint

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class _KbStore:
    """KB documents under one directory, with a write lock per name."""

    def __init__(self, root: Path):
        self.root = root
        self.docs: dict[str, KbDocument] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry = threading.Lock()
        root.mkdir(parents=True, exist_ok=True)
        for path in sorted(root.glob("*.kb")):
            try:
                self.docs[path.stem] = parse_kb(path.read_text(encoding="utf-8"))
            except (GbiError, OSError):
                continue  # unreadable files are skipped, not fatal at startup

    def lock(self, name: str) -> threading.RLock:
        with self._registry:
            return self._locks.setdefault(name, threading.RLock())

    def get(self, name: str) -> KbDocument:
        try:
            return self.docs[name]
        except KeyError:
            raise LookupError(f"no KB named {name!r}") from None

    def put(self, name: str, doc: KbDocument) -> None:
        (self.root / f"{name}.kb").write_text(serialize_kb(doc), encoding="utf-8")
        self.docs[name] = doc


class _SessionBox:
    def __init__(self, kb_name: str, session: Session):
        self.kb_name = kb_name
        self.session = session
        self.lock = threading.Lock()


def _require(payload: Any, field: str, path: str = "body") -> Any:
    if not isinstance(payload, dict):
        raise SchemaError("expected an object", path)
    if field not in payload:
        raise SchemaError(f"missing field {field!r}", path)
    return payload[field]


def _replace_records(doc: KbDocument, leg_id: str, records) -> KbDocument:
    """New document with one LEG's records swapped in and the CMD cache dropped."""
    others = [r for r in doc.constraints if r.key.leg_id != leg_id]
    return KbDocument(
        name=doc.name,
        description=doc.description,
        variables=doc.variables,
        legs=doc.legs,
        relations=doc.relations,
        constraints=tuple(others) + tuple(records),
        cmds={},
    )


def _record_payload(doc: KbDocument, record) -> dict:
    leg = next(leg for leg in doc.legs if leg.id == record.key.leg_id)
    members = set(record.key.subset)
    return {
        "leg": record.key.leg_id,
        "subset": [v for v in leg.variables if v in members],
        "value": record.value,
        "source": record.source,
        "entry_form": record.entry_form,
        "given": None
        if record.given is None
        else [v for v in leg.variables if v in record.given],
        "given_value": record.given_value,
    }


def _next_constraint_payload(doc: KbDocument, state) -> dict:
    key = next_key(state)
    total = len(state.records) + len(remaining_keys(state))
    body: dict[str, Any] = {
        "leg": state.leg.id,
        "accepted": len(state.records),
        "total": total,
        "remaining": total - len(state.records),
        "done": key is None,
        "key": None,
        "interval": None,
        "default": None,
    }
    if key is not None:
        lo, hi = feasible_interval(state, key)
        members = set(key.subset)
        body["key"] = {"subset": [v for v in state.leg.variables if v in members]}
        body["interval"] = [lo, hi]
        body["default"] = min_info_default(state, key)
    return body


def _marginal_rows(doc: KbDocument, session: Session) -> list[dict]:
    asserted = session.asserted()
    return [
        {
            "variable": v.id,
            "name": v.name,
            "kind": v.kind,
            "is_bev": v.is_bev,
            "value": marginal(session, v.id),
            "asserted": asserted.get(v.id),
        }
        for v in doc.variables
    ]


def _evidence_pairs(doc: KbDocument, payload: Any) -> list[tuple[str, bool]]:
    raw = _require(payload, "evidence")
    pairs: list[tuple[str, bool]] = []
    if isinstance(raw, dict):
        items = list(raw.items())
    elif isinstance(raw, list):
        items = []
        for i, node in enumerate(raw):
            items.append(
                (
                    _require(node, "variable", f"evidence[{i}]"),
                    _require(node, "observed", f"evidence[{i}]"),
                )
            )
    else:
        raise SchemaError("evidence must be an object or an array", "body.evidence")
    for name, observed in items:
        if not isinstance(observed, bool):
            raise SchemaError("observed must be a boolean", f"body.evidence.{name}")
        pairs.append((resolve_variable(doc, str(name)), observed))
    return pairs


_STATUS = [
    (ConflictingEvidence, 409),
    (SchemaError, 400),
    (UnsupportedVersion, 400),
]


def _error_response(exc: Exception) -> JSONResponse:
    status = 422
    for kind, code in _STATUS:
        if isinstance(exc, kind):
            status = code
            break
    body: dict[str, Any] = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConstraintOutOfRange) and exc.lo is not None:
        body["interval"] = [exc.lo, exc.hi]
    if isinstance(exc, InvalidNet) and exc.report is not None:
        body["violations"] = [
            {"code": v.code, "subject": v.subject, "message": v.message}
            for v in exc.report.violations
        ]
    return JSONResponse(status_code=status, content=body)


def create_app(kb_dir: str | Path) -> FastAPI:
    app = FastAPI(title="gbi", version="0.1.0")
    store = _KbStore(Path(kb_dir))
    sessions: dict[str, _SessionBox] = {}
    session_ids = itertools.count(1)
    session_registry = threading.Lock()

    @app.exception_handler(GbiError)
    async def _gbi_error(request: Request, exc: GbiError) -> JSONResponse:
        return _error_response(exc)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
        return _error_response(exc)

    @app.exception_handler(LookupError)
    async def _lookup_error(request: Request, exc: LookupError) -> JSONResponse:
        return JSONResponse(
            status_code=404, content={"error": "NotFound", "message": str(exc)}
        )

    def _session(sid: str) -> _SessionBox:
        try:
            return sessions[sid]
        except KeyError:
            raise LookupError(f"no session named {sid!r}") from None

    @app.get("/kbs")
    def list_kbs() -> dict:
        rows = []
        for name in sorted(store.docs):
            doc = store.docs[name]
            rows.append(
                {
                    "name": name,
                    "kb_name": doc.name,
                    "description": doc.description,
                    "variables": len(doc.variables),
                    "legs": len(doc.legs),
                    "built": len(doc.cmds) == len(doc.legs) and bool(doc.legs),
                }
            )
        return {"kbs": rows}

    @app.get("/kbs/{name}")
    def fetch_kb(name: str) -> dict:
        return json.loads(serialize_kb(store.get(name)))

    @app.put("/kbs/{name}")
    def store_kb(name: str, payload: dict) -> dict:
        if not _NAME_RE.match(name):
            raise SchemaError("invalid KB name", "name")
        doc = parse_kb(json.dumps(payload))
        with store.lock(name):
            store.put(name, doc)
        return {"name": name, "stored": True}

    @app.get("/kbs/{name}/net")
    def kb_net(name: str) -> dict:
        doc = store.get(name)
        net = net_from_document(doc, include_cmds=False)
        variables = {v.id: v for v in doc.variables}
        edges = [
            {"a": a, "b": b, "shared": list(shared)}
            for (a, b), shared in compute_intersections(net).items()
        ]
        entries, full = storage_footprint(net)
        return {
            "legs": [
                {
                    "id": leg.id,
                    "name": leg.name,
                    "variables": [
                        {
                            "id": vid,
                            "name": variables[vid].name if vid in variables else vid,
                            "kind": variables[vid].kind if vid in variables else None,
                            "is_bev": variables[vid].is_bev if vid in variables else False,
                        }
                        for vid in leg.variables
                    ],
                }
                for leg in doc.legs
            ],
            "edges": edges,
            "storage": {"cmd_entries": entries, "full_joint_entries": full},
        }

    @app.get("/kbs/{name}/legs/{leg}/next-constraint")
    def next_constraint(name: str, leg: str) -> dict:
        doc = store.get(name)
        leg_id = resolve_leg(doc, leg)
        return _next_constraint_payload(doc, elicitation_states(doc)[leg_id])

    @app.post("/kbs/{name}/legs/{leg}/accept-constraint")
    def post_constraint(name: str, leg: str, payload: dict) -> dict:
        with store.lock(name):
            doc = store.get(name)
            leg_id = resolve_leg(doc, leg)
            state = elicitation_states(doc)[leg_id]
            key = next_key(state)
            if key is None:
                raise ValueError(f"LEG {leg_id!r} is fully specified")
            if payload.get("subset") is not None:
                wanted = frozenset(
                    resolve_variable(doc, str(v)) for v in payload["subset"]
                )
                if wanted != key.subset:
                    raise ValueError(
                        f"subset {sorted(wanted)} is not the next canonical key "
                        f"{sorted(key.subset)}"
                    )
            if payload.get("default"):
                state = accept_default(state)
            elif payload.get("conditional") is not None:
                node = payload["conditional"]
                given = [
                    resolve_variable(doc, str(v))
                    for v in _require(node, "given", "body.conditional")
                ]
                value = _require(node, "value", "body.conditional")
                state = accept_constraint(
                    state, key, ConditionalEntry(given, float(value))
                )
            elif "value" in payload:
                state = accept_constraint(state, key, float(payload["value"]))
            else:
                raise SchemaError(
                    "provide 'value', 'conditional', or 'default': true", "body"
                )
            updated = _replace_records(doc, leg_id, state.records)
            store.put(name, updated)
            return {
                "accepted": _record_payload(updated, state.records[-1]),
                "next": _next_constraint_payload(updated, state),
            }

    @app.post("/kbs/{name}/build")
    def build_kb(name: str, payload: dict | None = None) -> dict:
        raw = (payload or {}).get("max_order")
        if raw is not None and raw != "all" and not isinstance(raw, int):
            raise SchemaError("max_order must be an integer or 'all'", "body.max_order")
        with store.lock(name):
            doc = store.get(name)
            built = build_document(doc, raw)
            store.put(name, built)
        net = net_from_document(built)
        entries, full = storage_footprint(net)
        return {
            "name": name,
            "storage": {"cmd_entries": entries, "full_joint_entries": full},
            "cmds": {leg_id: list(atoms) for leg_id, atoms in built.cmds.items()},
        }

    @app.post("/sessions")
    def create_session(payload: dict) -> dict:
        kb_name = str(_require(payload, "kb"))
        with store.lock(kb_name):
            doc = store.get(kb_name)
            if len(doc.cmds) != len(doc.legs):
                doc = build_document(doc)
                store.put(kb_name, doc)
        session = open_document_session(doc)
        with session_registry:
            sid = f"s{next(session_ids)}"
            sessions[sid] = _SessionBox(kb_name, session)
        return {
            "session_id": sid,
            "kb": kb_name,
            "marginals": _marginal_rows(doc, session),
        }

    @app.get("/sessions/{sid}/marginals")
    def session_marginals(sid: str) -> dict:
        box = _session(sid)
        return {
            "session_id": sid,
            "kb": box.kb_name,
            "marginals": _marginal_rows(store.get(box.kb_name), box.session),
        }

    @app.post("/sessions/{sid}/assert-evidence")
    def post_evidence(sid: str, payload: dict) -> dict:
        box = _session(sid)
        doc = store.get(box.kb_name)
        pairs = _evidence_pairs(doc, payload)
        with box.lock:
            before = len(box.session.trace)
            box.session = assert_evidence(box.session, pairs)
            session = box.session
        return {
            "session_id": sid,
            "evidence": [assertion_payload(a) for a in session.evidence],
            "steps": [step_payload(s) for s in session.trace[before:]],
            "marginals": _marginal_rows(doc, session),
        }

    @app.get("/sessions/{sid}/rank-evidence")
    def session_ranking(sid: str, direction: str = "most-likely") -> dict:
        box = _session(sid)
        if direction in ("most", "least"):
            direction += "-likely"
        doc = store.get(box.kb_name)
        names = {v.id: v.name for v in doc.variables}
        rows = rank_evidence(box.session, direction)
        return {
            "session_id": sid,
            "direction": direction,
            "ranking": [
                {"variable": vid, "name": names.get(vid, vid), "value": value}
                for vid, value in rows
            ],
        }

    @app.get("/sessions/{sid}/trace")
    def session_trace(sid: str) -> dict:
        box = _session(sid)
        return {
            "session_id": sid,
            "steps": [step_payload(s) for s in box.session.trace],
        }

    @app.get("/sessions/{sid}/consistency")
    def session_consistency(sid: str) -> dict:
        box = _session(sid)
        session = box.session
        report = check_consistency(session.net, session.current)
        return {
            "session_id": sid,
            "tol": report.tol,
            "ok": report.ok,
            "max_discrepancy": report.max_discrepancy,
            "edges": [
                {
                    "a": e.leg_a,
                    "b": e.leg_b,
                    "shared": list(e.shared),
                    "max_discrepancy": e.discrepancy,
                }
                for e in report.edges
            ],
        }

    return app
