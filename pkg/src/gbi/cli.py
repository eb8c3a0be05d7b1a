"""Command-line front end: validate, build, elicit, infer, trace, serve.

Domain failures exit nonzero with a one-line JSON error on stderr so the
commands are scriptable; human-oriented output goes to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any

from .dist import atom_label
from .elicit import (
    ConditionalEntry,
    accept_constraint,
    accept_default,
    feasible_interval,
    min_info_default,
    next_key,
    remaining_keys,
)
from .errors import ConstraintOutOfRange, GbiError, InvalidNet
from .infer import assert_evidence, goal_report, marginal, rank_evidence
from .kbdoc import (
    KbDocument,
    build_document,
    elicitation_states,
    net_from_document,
    open_document_session,
    parse_kb,
    parse_session,
    resolve_leg,
    resolve_variable,
    serialize_kb,
    serialize_session,
    session_document,
    verify_cache,
)
from .net import storage_footprint, validate


def _read_kb(path: str) -> KbDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_kb(fh.read())


def _write_kb(path: str, doc: KbDocument) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_kb(doc))


def _variable_name(doc: KbDocument, var_id: str) -> str:
    for v in doc.variables:
        if v.id == var_id:
            return v.name
    return var_id


def _parse_max_order(text: str | None) -> int | str | None:
    if text is None:
        return None
    if text == "all":
        return "all"
    try:
        value = int(text)
    except ValueError:
        raise GbiError("--max-order takes an integer or 'all'") from None
    if value < 1:
        raise GbiError("--max-order must be at least 1")
    return value


# ------------------------------------------------------------- commands


def _cmd_validate(args: argparse.Namespace) -> int:
    doc = _read_kb(args.kb)
    problems: list[str] = []
    report = validate(net_from_document(doc, include_cmds=False))
    problems.extend(f"{v.code}: {v.message}" for v in report.violations)
    if not report.violations:
        try:
            elicitation_states(doc)
        except (GbiError, ValueError) as exc:
            problems.append(f"{type(exc).__name__}: {exc}")
        if not problems and doc.cmds:
            problems.extend(verify_cache(doc))
    if problems:
        for line in problems:
            print(line)
        return 1
    print("valid")
    return 0


def _print_cmd_table(doc: KbDocument, leg_id: str, atoms) -> None:
    leg = next(leg for leg in doc.legs if leg.id == leg_id)
    print(f"LEG {leg.name} ({', '.join(leg.variables)})")
    m = len(leg.variables)
    for mask, value in enumerate(atoms):
        print(f"  {atom_label(mask, m)}  {value:.10g}")


def _cmd_build(args: argparse.Namespace) -> int:
    doc = _read_kb(args.kb)
    built = build_document(doc, _parse_max_order(args.max_order))
    _write_kb(args.kb, built)
    net = net_from_document(built)
    entries, full = storage_footprint(net)
    print(f"storage: {entries} CMD entries across {len(built.legs)} LEGs "
          f"(full joint would need {full})")
    for leg in built.legs:
        _print_cmd_table(built, leg.id, built.cmds[leg.id])
    return 0


def _format_key(state, key) -> str:
    ordered = [v for v in state.leg.variables if v in key.subset]
    return " & ".join(ordered)


def _parse_entry(line: str) -> float | ConditionalEntry | None:
    """A bare number is a joint value; 'p | a & b' is Pr(rest | a&b) = p."""
    text = line.strip()
    if not text or text.lower() == "default":
        return None
    if "|" in text:
        left, right = text.split("|", 1)
        given = [name.strip() for name in right.split("&") if name.strip()]
        return ConditionalEntry(given, float(left))
    return float(text)


def _cmd_elicit(args: argparse.Namespace) -> int:
    doc = _read_kb(args.kb)
    leg_id = resolve_leg(doc, args.leg)
    states = elicitation_states(doc)
    state = states[leg_id]
    total = len(state.records) + len(remaining_keys(state))
    changed = False
    while True:
        key = next_key(state)
        if key is None:
            print("all constraints specified")
            break
        lo, hi = feasible_interval(state, key)
        default = min_info_default(state, key)
        position = len(state.records) + 1
        print(f"[{position}/{total}] Pr({_format_key(state, key)})", flush=True)
        print(f"  interval [{lo:.10g}, {hi:.10g}]  default {default:.10g}", flush=True)
        line = sys.stdin.readline()
        if not line or line.strip().lower() in ("quit", "q"):
            print("stopping; accepted constraints kept")
            break
        try:
            entry = _parse_entry(line)
            if entry is None:
                state = accept_default(state)
            else:
                if isinstance(entry, ConditionalEntry):
                    entry = ConditionalEntry(
                        [_local_variable(state, doc, v) for v in entry.given], entry.value
                    )
                state = accept_constraint(state, key, entry)
        except (GbiError, ValueError) as exc:
            print(f"  rejected: {exc}", flush=True)
            continue
        record = state.records[-1]
        print(f"  accepted Pr({_format_key(state, record.key)}) = {record.value:.10g}")
        changed = True
    if changed:
        others = [r for r in doc.constraints if r.key.leg_id != leg_id]
        updated = KbDocument(
            name=doc.name,
            description=doc.description,
            variables=doc.variables,
            legs=doc.legs,
            relations=doc.relations,
            constraints=tuple(others) + state.records,
            cmds={},
        )
        _write_kb(args.kb, updated)
        print(f"updated {args.kb} ({len(state.records)} records for {leg_id}; "
              "cached CMDs cleared)")
    return 0


def _local_variable(state, doc: KbDocument, token: str) -> str:
    var_id = resolve_variable(doc, token)
    if var_id not in state.leg.variables:
        raise GbiError(f"variable {token!r} is not in LEG {state.leg.id!r}")
    return var_id


def _parse_evidence(doc: KbDocument, text: str) -> list[tuple[str, bool]]:
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise GbiError(f"evidence item {chunk!r} is not name=true/false")
        name, _, raw = chunk.partition("=")
        raw = raw.strip().lower()
        if raw in ("true", "occur", "yes", "1"):
            observed = True
        elif raw in ("false", "not-occur", "no", "0"):
            observed = False
        else:
            raise GbiError(f"evidence value {raw!r} is not true/false")
        pairs.append((resolve_variable(doc, name.strip()), observed))
    if not pairs:
        raise GbiError("no evidence given")
    return pairs


def _ensure_built(doc: KbDocument, strict: bool) -> KbDocument:
    if len(doc.cmds) == len(doc.legs) and doc.legs:
        if strict:
            problems = verify_cache(doc)
            if problems:
                raise GbiError("; ".join(problems))
        return doc
    return build_document(doc)


def _cmd_infer(args: argparse.Namespace) -> int:
    doc = _ensure_built(_read_kb(args.kb), args.strict)
    session = open_document_session(doc)
    session = assert_evidence(session, _parse_evidence(doc, args.evidence))
    print("Goals")
    for var_id, value in goal_report(session).items():
        print(f"  {_variable_name(doc, var_id)} {value:.4f}")
    hypotheses = [v for v in doc.variables if v.kind == "hypothesis"]
    if hypotheses:
        print("Hypotheses")
        for v in hypotheses:
            print(f"  {v.name} {marginal(session, v.id):.4f}")
    if args.rank:
        direction = "most-likely" if args.rank == "most" else "least-likely"
        print(f"Evidence ranking ({direction})")
        for var_id, value in rank_evidence(session, direction):
            print(f"  {_variable_name(doc, var_id)} {value:.4f}")
    out = args.session_out or args.kb + ".session"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(serialize_session(session_document(session, args.kb)))
    print(f"session written to {out}")
    return 0


def _cmd_trace(args: argparse.Namespace) -> int:
    with open(args.session, encoding="utf-8") as fh:
        sdoc = parse_session(fh.read())
    if not sdoc.trace:
        print("no update steps")
        return 0
    for step in sdoc.trace:
        print(
            f"#{step.seq} {step.kind} {step.source_leg} -> {step.target_leg} "
            f"shared({', '.join(step.shared)}) drift={step.drift:.3g}"
        )
        k = len(step.shared)
        for cell, (before, after) in enumerate(
            zip(step.prior_marginal, step.posterior_marginal)
        ):
            ratio = "-" if before <= 0 else f"{after / before:.6g}"
            print(f"    {atom_label(cell, k)}  {before:.6f} -> {after:.6f}  x{ratio}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    kb_dir = args.kb_dir or os.environ.get("GBI_KB_DIR") or "kbs"
    app = create_app(kb_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _emit_error(exc: Exception) -> None:
    body: dict[str, Any] = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConstraintOutOfRange) and exc.lo is not None:
        body["interval"] = [exc.lo, exc.hi]
    if isinstance(exc, InvalidNet) and exc.report is not None:
        body["violations"] = [
            {"code": v.code, "subject": v.subject, "message": v.message}
            for v in exc.report.violations
        ]
    print(json.dumps(body), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbi",
        description="Expert-system shell: local event groups with generalized "
        "Bayesian updating.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a KB's structure, records, and cache")
    p.add_argument("kb")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("build", help="fill defaults, build all CMDs, write the cache")
    p.add_argument("kb")
    p.add_argument("--max-order", default=None,
                   help="require explicit constraints up to this order ('all' = every key)")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("elicit", help="interactive constraint entry for one LEG")
    p.add_argument("kb")
    p.add_argument("--leg", required=True)
    p.set_defaults(func=_cmd_elicit)

    p = sub.add_parser("infer", help="assert evidence and report posteriors")
    p.add_argument("kb")
    p.add_argument("--evidence", required=True,
                   help="comma-separated name=true/false assignments")
    p.add_argument("--rank", choices=["most", "least"], default=None)
    p.add_argument("--strict", action="store_true",
                   help="verify cached CMDs against a rebuild before inferring")
    p.add_argument("--session-out", default=None)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("trace", help="print a session's update steps")
    p.add_argument("session")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--kb-dir", default=None,
                   help="directory of .kb files (default: $GBI_KB_DIR or ./kbs)")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GbiError, ValueError, OSError) as exc:
        _emit_error(exc)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
