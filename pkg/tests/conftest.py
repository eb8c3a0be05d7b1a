"""Shared fixtures: the two worked elicitation walks and the weather KB."""

import pytest

from gbi import (
    ConditionalEntry,
    ConstraintKey,
    Leg,
    accept_constraint,
    build_cmd,
    new_elicitation,
    serialize_kb,
)
from gbi.weather import built_weather_document

# Other-Predictions over (FA-Precip, NWS-Precip, Others-Precip), bit 0..2.
# The three certainty conditionals force every P-free combination of F/N to
# exclude P, so only four atoms carry mass.
OTHER_PREDICTIONS_ATOMS = (0.35, 0.0, 0.0, 0.0, 0.0, 0.10, 0.20, 0.35)

# Folk-Predictions over (Moon-Haze, Bunions-Ache, Folk-Precip), rounded to
# the four decimals of the worked example.
FOLK_PREDICTIONS_ATOMS = (
    0.1255,
    0.2570,
    0.0645,
    0.0030,
    0.0745,
    0.0930,
    0.0855,
    0.2970,
)


def other_predictions_state():
    """The seven-step Other-Predictions walk: four joints, three certainty conditionals."""
    leg = Leg("op", "Other-Predictions", ("F", "N", "P"))
    state = new_elicitation(leg)
    state = accept_constraint(state, ConstraintKey("op", {"F"}), 0.45)
    state = accept_constraint(state, ConstraintKey("op", {"N"}), 0.55)
    state = accept_constraint(state, ConstraintKey("op", {"N", "F"}), 0.35)
    state = accept_constraint(state, ConstraintKey("op", {"P"}), 0.65)
    state = accept_constraint(
        state, ConstraintKey("op", {"P", "F"}), ConditionalEntry({"F"}, 1.0)
    )
    state = accept_constraint(
        state, ConstraintKey("op", {"P", "N"}), ConditionalEntry({"N"}, 1.0)
    )
    state = accept_constraint(
        state,
        ConstraintKey("op", {"P", "N", "F"}),
        ConditionalEntry({"N", "F"}, 1.0),
    )
    return state


def folk_predictions_state():
    """The seven-step Folk-Predictions walk: four joints, three conditionals."""
    leg = Leg("fp", "Folk-Predictions", ("M", "G", "P"))
    state = new_elicitation(leg)
    state = accept_constraint(state, ConstraintKey("fp", {"M"}), 0.65)
    state = accept_constraint(state, ConstraintKey("fp", {"G"}), 0.45)
    state = accept_constraint(state, ConstraintKey("fp", {"G", "M"}), 0.30)
    state = accept_constraint(state, ConstraintKey("fp", {"P"}), 0.55)
    state = accept_constraint(
        state, ConstraintKey("fp", {"P", "M"}), ConditionalEntry({"M"}, 0.60)
    )
    state = accept_constraint(
        state, ConstraintKey("fp", {"P", "G"}), ConditionalEntry({"G"}, 0.85)
    )
    state = accept_constraint(
        state,
        ConstraintKey("fp", {"P", "G", "M"}),
        ConditionalEntry({"G", "M"}, 0.99),
    )
    return state


@pytest.fixture(scope="session")
def other_predictions_cmd():
    return build_cmd(other_predictions_state(), "all")


@pytest.fixture(scope="session")
def folk_predictions_cmd():
    return build_cmd(folk_predictions_state(), "all")


@pytest.fixture(scope="session")
def weather_built():
    """The example weather KB with all four CMD caches built."""
    return built_weather_document()


@pytest.fixture(scope="session")
def kb_root(tmp_path_factory, weather_built):
    root = tmp_path_factory.mktemp("kbs")
    (root / "weather.kb").write_text(serialize_kb(weather_built))
    return root


@pytest.fixture(scope="session")
def api_client(kb_root):
    from fastapi.testclient import TestClient

    from gbi.api import create_app

    with TestClient(create_app(str(kb_root))) as client:
        yield client
