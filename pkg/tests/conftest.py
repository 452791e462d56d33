import pytest

from aebscore.impact import ImpactPowerModel
from aebscore.protocol import bundled_protocol_path, load_protocol


@pytest.fixture(scope="session")
def protocol():
    return load_protocol(bundled_protocol_path())


@pytest.fixture(scope="session")
def model():
    return ImpactPowerModel()
