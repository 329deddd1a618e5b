import os

import pytest
from hypothesis import HealthCheck, settings

from percolab.lattice import build_box, config_from_open_edges

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

# the hand-checked radius-1 configuration used across modules
SMALL_OPEN = [((0, 0), (1, 0)), ((0, 0), (0, 1)), ((1, 0), (1, 1))]


@pytest.fixture
def small_config():
    return config_from_open_edges(build_box(2, 1), SMALL_OPEN)
