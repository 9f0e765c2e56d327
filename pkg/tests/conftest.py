import os

import pytest
from hypothesis import HealthCheck, settings

from catr.config import RobotConfig

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def config():
    return RobotConfig()


@pytest.fixture(scope="session")
def robot(config):
    return config.robot()


@pytest.fixture(scope="session")
def proximal(config):
    return config.segment("proximal")
