"""A worked example knowledge base: precipitation prediction.

Four LEGs combine agency forecasts, folk signs, and temperature bands
into tomorrow's rain/snow/no-precipitation advice. The two forecast
LEGs are fully constrained; the larger goal and temperature LEGs pin
every constraint up to order 2 and take minimum-information defaults
for the rest.

Run as a script to (re)write the packaged KB file:

    python3 -m gbi.weather [path]
"""

from __future__ import annotations

import sys
from functools import lru_cache

import numpy as np

from .elicit import ConstraintKey, ConstraintRecord, canonical_sequence
from .kbdoc import KbDocument, build_document, serialize_kb
from .net import Forbidden, Leg, Variable

KB_NAME = "weather"
KB_DESCRIPTION = (
    "Precipitation prediction for Upstate New York: agency forecasts, folk "
    "signs, and temperature bands feeding a rain/snow/no-precip goal LEG."
)

VARIABLES = (
    Variable("fa-precip", "FA-Precip", "evidence", is_bev=True),
    Variable("nws-precip", "NWS-Precip", "evidence", is_bev=True),
    Variable("others-precip", "Others-Precip", "hypothesis"),
    Variable("moon-haze", "Moon-Haze", "evidence", is_bev=True),
    Variable("bunions-ache", "Bunions-Ache", "evidence", is_bev=True),
    Variable("folk-precip", "Folk-Precip", "hypothesis"),
    Variable("rain-temp", "Rain-Temp", "hypothesis"),
    Variable("snow-temp", "Snow-Temp", "hypothesis"),
    Variable("rain-tomorrow", "Rain-Tomorrow", "goal"),
    Variable("snow-tomorrow", "Snow-Tomorrow", "goal"),
    Variable("no-precip-tomorrow", "No-Precip-Tomorrow", "goal"),
    Variable("temp-lt-28f", "Temp-LT-28F", "evidence", is_bev=True),
    Variable("temp-bt-28-36f", "Temp-BT-28-36F", "evidence", is_bev=True),
    Variable("temp-gt-36f", "Temp-GT-36F", "evidence", is_bev=True),
)

LEGS = (
    Leg("other-predictions", "Other-Predictions", ("fa-precip", "nws-precip", "others-precip")),
    Leg("folk-predictions", "Folk-Predictions", ("moon-haze", "bunions-ache", "folk-precip")),
    Leg(
        "kind-of-precip",
        "Kind-of-Precip",
        (
            "folk-precip",
            "others-precip",
            "rain-temp",
            "snow-temp",
            "rain-tomorrow",
            "snow-tomorrow",
            "no-precip-tomorrow",
        ),
    ),
    Leg(
        "expected-temperature",
        "Expected-Temperature",
        ("temp-lt-28f", "temp-bt-28-36f", "temp-gt-36f", "snow-temp", "rain-temp"),
    ),
)

# The three temperature bands are mutually exclusive; no-precip cannot
# co-occur with either kind of precipitation.
RELATIONS = (
    Forbidden("temp-lt-28f", "temp-bt-28-36f"),
    Forbidden("temp-lt-28f", "temp-gt-36f"),
    Forbidden("temp-bt-28-36f", "temp-gt-36f"),
    Forbidden("no-precip-tomorrow", "rain-tomorrow"),
    Forbidden("no-precip-tomorrow", "snow-tomorrow"),
)


def _joint(leg_id: str, subset, value: float) -> ConstraintRecord:
    return ConstraintRecord(ConstraintKey(leg_id, subset), float(value), "user-specified")


def _conditional(leg_id: str, subset, given, cond_value: float, base: float) -> ConstraintRecord:
    # Same conversion accept_constraint applies to a ConditionalEntry.
    return ConstraintRecord(
        ConstraintKey(leg_id, subset),
        float(cond_value) * float(base),
        "user-specified",
        entry_form="conditional",
        given=frozenset(given),
        given_value=float(cond_value),
    )


def _other_predictions_records() -> list[ConstraintRecord]:
    """Agency forecasts: either source predicting precipitation makes the
    combined hypothesis certain, so the hypothesis conditionals are all 1."""
    leg = "other-predictions"
    return [
        _joint(leg, ["fa-precip"], 0.45),
        _joint(leg, ["nws-precip"], 0.55),
        _joint(leg, ["fa-precip", "nws-precip"], 0.35),
        _joint(leg, ["others-precip"], 0.65),
        _conditional(leg, ["others-precip", "fa-precip"], ["fa-precip"], 1.00, 0.45),
        _conditional(leg, ["others-precip", "nws-precip"], ["nws-precip"], 1.00, 0.55),
        _conditional(
            leg,
            ["others-precip", "fa-precip", "nws-precip"],
            ["fa-precip", "nws-precip"],
            1.00,
            0.35,
        ),
    ]


def _folk_predictions_records() -> list[ConstraintRecord]:
    """Folk signs: haze around the moon and Grandma's bunions, weighed
    into a folk precipitation call."""
    leg = "folk-predictions"
    return [
        _joint(leg, ["moon-haze"], 0.65),
        _joint(leg, ["bunions-ache"], 0.45),
        _joint(leg, ["moon-haze", "bunions-ache"], 0.30),
        _joint(leg, ["folk-precip"], 0.55),
        _conditional(leg, ["folk-precip", "moon-haze"], ["moon-haze"], 0.60, 0.65),
        _conditional(leg, ["folk-precip", "bunions-ache"], ["bunions-ache"], 0.85, 0.45),
        _conditional(
            leg,
            ["folk-precip", "moon-haze", "bunions-ache"],
            ["moon-haze", "bunions-ache"],
            0.99,
            0.30,
        ),
    ]


def _expected_temperature_records() -> list[ConstraintRecord]:
    """Temperature bands and their pull toward snow or rain conditions.

    Band marginals are joint entries; the snow/rain leanings are easiest
    to state as conditionals on each band. The rain-and-snow overlap is
    what band-wise independence of the two leanings gives:
    0.30*0.05*0.95 + 0.30*0.60*0.65 + 0.40*0.90*0.05 = 0.14925.
    """
    leg = "expected-temperature"
    return [
        _joint(leg, ["temp-lt-28f"], 0.30),
        _joint(leg, ["temp-bt-28-36f"], 0.30),
        _joint(leg, ["temp-gt-36f"], 0.40),
        _joint(leg, ["snow-temp"], 0.50),
        _conditional(leg, ["snow-temp", "temp-lt-28f"], ["temp-lt-28f"], 0.95, 0.30),
        _conditional(leg, ["snow-temp", "temp-bt-28-36f"], ["temp-bt-28-36f"], 0.65, 0.30),
        _conditional(leg, ["snow-temp", "temp-gt-36f"], ["temp-gt-36f"], 0.05, 0.40),
        _joint(leg, ["rain-temp"], 0.555),
        _conditional(leg, ["rain-temp", "temp-lt-28f"], ["temp-lt-28f"], 0.05, 0.30),
        _conditional(leg, ["rain-temp", "temp-bt-28-36f"], ["temp-bt-28-36f"], 0.60, 0.30),
        _conditional(leg, ["rain-temp", "temp-gt-36f"], ["temp-gt-36f"], 0.90, 0.40),
        _joint(leg, ["rain-temp", "snow-temp"], 0.14925),
    ]


# Pairwise beliefs for the goal LEG are invented from a concrete scenario
# joint so that every order-2 constraint is automatically consistent with
# the others and with the neighboring LEGs' shared marginals.

# Pr(folk-precip, others-precip): the two calls lean the same way.
_FORECAST_CELLS = {(0, 0): 0.22, (1, 0): 0.13, (0, 1): 0.23, (1, 1): 0.42}
# Pr(rain-temp, snow-temp): matches the expected-temperature records.
_CONDITIONS_CELLS = {(0, 0): 0.09425, (1, 0): 0.40575, (0, 1): 0.35075, (1, 1): 0.14925}
# Chance of any precipitation tomorrow, by (folk-precip, others-precip).
_PRECIP_CHANCE = {(0, 0): 0.10, (1, 0): 0.45, (0, 1): 0.70, (1, 1): 0.90}
# Leanings toward rain/snow given precipitation, by (rain-temp, snow-temp).
_RAIN_LEAN = {(0, 0): 0.40, (1, 0): 0.85, (0, 1): 0.15, (1, 1): 0.60}
_SNOW_LEAN = {(0, 0): 0.30, (1, 0): 0.10, (0, 1): 0.85, (1, 1): 0.55}


def _scenario_joint() -> np.ndarray:
    """Scenario over the goal LEG's seven variables, atom bit k = variable k.

    Forecasts and temperature conditions are independent blocks; tomorrow's
    outcome is no-precip with the complementary precipitation chance, else
    rain/snow/both split by the temperature leanings (conditioned on at
    least one kind occurring).
    """
    joint = np.zeros(1 << 7)
    for fp in (0, 1):
        for op in (0, 1):
            for rt in (0, 1):
                for st in (0, 1):
                    base = _FORECAST_CELLS[(fp, op)] * _CONDITIONS_CELLS[(rt, st)]
                    chance = _PRECIP_CHANCE[(fp, op)]
                    rain, snow = _RAIN_LEAN[(rt, st)], _SNOW_LEAN[(rt, st)]
                    some = 1.0 - (1.0 - rain) * (1.0 - snow)
                    cell = fp | op << 1 | rt << 2 | st << 3
                    joint[cell | 1 << 6] = base * (1.0 - chance)
                    joint[cell | 1 << 4] = base * chance * rain * (1.0 - snow) / some
                    joint[cell | 1 << 5] = base * chance * (1.0 - rain) * snow / some
                    joint[cell | 3 << 4] = base * chance * rain * snow / some
    return joint


def _kind_of_precip_records() -> list[ConstraintRecord]:
    """Every order-1 and order-2 constraint of the scenario joint,
    in canonical order; higher orders are left to defaults."""
    leg = LEGS[2]
    joint = _scenario_joint()
    idx = np.arange(joint.size)
    records = []
    for key in canonical_sequence(leg, RELATIONS):
        if key.order > 2:
            continue
        mask = 0
        for name in key.subset:
            mask |= 1 << leg.variables.index(name)
        value = float(joint[(idx & mask) == mask].sum())
        records.append(ConstraintRecord(key, value, "user-specified"))
    return records


@lru_cache(maxsize=1)
def _records() -> tuple[ConstraintRecord, ...]:
    return tuple(
        _other_predictions_records()
        + _folk_predictions_records()
        + _kind_of_precip_records()
        + _expected_temperature_records()
    )


def weather_document() -> KbDocument:
    """The example KB with its constraint records and no built CMDs."""
    return KbDocument(
        name=KB_NAME,
        description=KB_DESCRIPTION,
        variables=VARIABLES,
        legs=LEGS,
        relations=RELATIONS,
        constraints=_records(),
        cmds={},
    )


@lru_cache(maxsize=1)
def _built() -> KbDocument:
    return build_document(weather_document(), max_order=2)


def built_weather_document() -> KbDocument:
    """The example KB with all four CMDs built (order-2 records, defaults above)."""
    doc = _built()
    return KbDocument(
        name=doc.name,
        description=doc.description,
        variables=doc.variables,
        legs=doc.legs,
        relations=doc.relations,
        constraints=doc.constraints,
        cmds=dict(doc.cmds),
    )


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    path = args[0] if args else "kbs/weather.kb"
    text = serialize_kb(built_weather_document())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
