# tests/conftest.py
from pathlib import Path

import pytest

from compactify import default_battery
from limits import default_schedule
from runtime_config import default_tolerances

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def tol():
    return default_tolerances()


@pytest.fixture
def battery():
    return default_battery()


@pytest.fixture
def schedule():
    return default_schedule()


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR
