import pytest
from hypothesis import HealthCheck, settings

from abcwalk.catalog import load_catalog

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=80,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def sol(catalog):
    return catalog["sol"]


@pytest.fixture(scope="session")
def g2(catalog):
    return catalog["g2"]
