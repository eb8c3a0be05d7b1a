#!/usr/bin/env python3
"""Record live API responses into JSON fixtures for the frontend tests.

Runs the knowledge-base service in process (no sockets) and saves each
response as {"status": ..., "body": ...}.  The contract tests replay these
files through a stub fetch, so they exercise the real payload shapes without
rebuilding the core.
"""

import json
import pathlib
import sys
import tempfile

from fastapi.testclient import TestClient

from gbi import (
    ConstraintKey,
    ConstraintRecord,
    Forbidden,
    KbDocument,
    Leg,
    Variable,
    serialize_kb,
)
from gbi.api import create_app
from gbi.weather import built_weather_document

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures")


def save(name: str, response) -> None:
    OUT.joinpath(f"{name}.json").write_text(
        json.dumps({"status": response.status_code, "body": response.json()},
                   indent=2, sort_keys=True) + "\n"
    )
    print(f"{name}: {response.status_code}")


def forecast_doc(name: str) -> dict:
    doc = KbDocument(
        name=name,
        description="forecast agreement walk, paused before the pair question",
        variables=(
            Variable("fa-precip", "FA-Precip", "evidence", is_bev=True),
            Variable("nws-precip", "NWS-Precip", "evidence", is_bev=True),
            Variable("others-precip", "Others-Precip", "hypothesis"),
        ),
        legs=(
            Leg("other-predictions", "Other-Predictions",
                ("fa-precip", "nws-precip", "others-precip")),
        ),
        relations=(),
        constraints=(
            ConstraintRecord(
                ConstraintKey("other-predictions", frozenset({"fa-precip"})),
                0.45, "user-specified"),
            ConstraintRecord(
                ConstraintKey("other-predictions", frozenset({"nws-precip"})),
                0.55, "user-specified"),
        ),
        cmds={},
    )
    return json.loads(serialize_kb(doc))


def exclusive_doc() -> dict:
    doc = KbDocument(
        name="exclusive-trio",
        description="three mutually exclusive outcomes",
        variables=(
            Variable("low", "Low", "evidence", is_bev=True),
            Variable("mid", "Mid", "evidence", is_bev=True),
            Variable("high", "High", "evidence", is_bev=True),
        ),
        legs=(Leg("band", "Band", ("low", "mid", "high")),),
        relations=(
            Forbidden("low", "mid"),
            Forbidden("low", "high"),
            Forbidden("mid", "high"),
        ),
        constraints=(),
        cmds={},
    )
    return json.loads(serialize_kb(doc))


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    root = pathlib.Path(tempfile.mkdtemp())
    (root / "weather.kb").write_text(serialize_kb(built_weather_document()))

    with TestClient(create_app(str(root))) as client:
        save("kbs", client.get("/kbs"))
        save("net-weather", client.get("/kbs/weather/net"))

        # Elicitation wizard: the pair question after the two marginals.
        client.put("/kbs/wizard", json=forecast_doc("wizard"))
        save("net-wizard", client.get("/kbs/wizard/net"))
        save("wizard-step",
             client.get("/kbs/wizard/legs/other-predictions/next-constraint"))
        wizard_url = "/kbs/wizard/legs/other-predictions/accept-constraint"
        save("wizard-accept", client.post(wizard_url, json={
            "subset": ["fa-precip", "nws-precip"], "value": 0.35}))
        save("wizard-accept-p", client.post(wizard_url, json={"value": 0.65}))
        for given in (["fa-precip"], ["nws-precip"], ["fa-precip", "nws-precip"]):
            response = client.post(wizard_url, json={
                "conditional": {"given": given, "value": 1.0}})
            assert response.status_code == 200, response.text
        save("wizard-done",
             client.get("/kbs/wizard/legs/other-predictions/next-constraint"))
        save("wizard-build", client.post("/kbs/wizard/build", json={}))

        # Out-of-range entry, recorded against an untouched copy.
        client.put("/kbs/wizard-range", json=forecast_doc("wizard-range"))
        save("wizard-out-of-range", client.post(
            "/kbs/wizard-range/legs/other-predictions/accept-constraint",
            json={"value": 0.50}))

        # Relation-pruned walk: forced-zero keys never appear.
        client.put("/kbs/exclusive-trio", json=exclusive_doc())
        save("exclusive-step",
             client.get("/kbs/exclusive-trio/legs/band/next-constraint"))

        # Consultation: the worked evidence pair.
        opened = client.post("/sessions", json={"kb": "weather"})
        save("session-open", opened)
        sid = opened.json()["session_id"]
        save("rank-most",
             client.get(f"/sessions/{sid}/rank-evidence?direction=most-likely"))
        save("rank-least",
             client.get(f"/sessions/{sid}/rank-evidence?direction=least-likely"))
        save("assert-folk", client.post(
            f"/sessions/{sid}/assert-evidence",
            json={"evidence": {"bunions-ache": True, "moon-haze": False}}))
        save("rank-after-folk", client.get(f"/sessions/{sid}/rank-evidence"))
        save("trace-folk", client.get(f"/sessions/{sid}/trace"))
        save("conflict", client.post(
            f"/sessions/{sid}/assert-evidence",
            json={"evidence": {"moon-haze": True}}))

        fresh = client.post("/sessions", json={"kb": "weather"})
        sid2 = fresh.json()["session_id"]
        save("session-open-2", fresh)
        save("impossible", client.post(
            f"/sessions/{sid2}/assert-evidence",
            json={"evidence": {"temp-lt-28f": True, "temp-bt-28-36f": True}}))


if __name__ == "__main__":
    main()
