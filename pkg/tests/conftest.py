import pytest
from hypothesis import HealthCheck, settings

from codedmr.model import JobSpec, validate_spec

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def example_spec():
    """Four servers, twelve chapters, two assigned and two mapped per chapter."""
    return validate_spec(JobSpec(n=12, q=4, k=4, pk=2, rk=2, f=8))
