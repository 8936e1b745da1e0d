import datetime as dt

import pytest

from afcon_sim import data
from afcon_sim.match_model import NestedPoissonModel

TRAIN_FROM = dt.date(2010, 1, 1)
TRAIN_TO = dt.date(2019, 4, 12)

# worked-example coefficients (Senegal attack, Ivory Coast concede/nested)
WORKED_COEFFICIENTS = {
    "SEN": {"attack": (2.73, -0.00145), "concede": (-4.0, 0.0024), "nested": (1.0, -0.0007, 0.1)},
    "CIV": {"attack": (2.0, -0.0014), "concede": (-4.0158, 0.00243), "nested": (1.431, -0.000728, 0.137)},
}


@pytest.fixture(scope="session")
def demo():
    return data.demo_paths()


@pytest.fixture(scope="session")
def demo_records(demo):
    return data.training_window(data.load_matches(demo["matches"]), TRAIN_FROM, TRAIN_TO)


@pytest.fixture(scope="session")
def demo_teams(demo):
    return data.load_teams(demo["teams"])


@pytest.fixture(scope="session")
def demo_elo(demo):
    return data.load_elo(demo["elo"])


@pytest.fixture(scope="session")
def demo_config(demo):
    return data.load_config(demo["config"])


@pytest.fixture(scope="session")
def demo_model(demo_records, demo_teams):
    return NestedPoissonModel().fit(demo_records, demo_teams)


@pytest.fixture
def worked_model():
    return NestedPoissonModel.from_coefficients(WORKED_COEFFICIENTS)
