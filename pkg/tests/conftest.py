import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# property tests must not depend on the run: fixed examples, no deadline so
# campaign-backed checks survive slow CI boxes
settings.register_profile(
    "repro",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repro")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
