import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from daid.domain import AttributeSchema, Dataset
from daid.synthgen import ScmConfig, generate

settings.register_profile("daid", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("daid")

GENDER_RACE = AttributeSchema(("gender", "race"), (("M", "F"), ("W", "B", "A")))


@pytest.fixture
def schema():
    return GENDER_RACE


def make_dataset(n=40, d=5, seed=0, schema=GENDER_RACE, domain="source"):
    rng = np.random.default_rng(seed)
    attrs = np.stack([rng.integers(0, c, size=n) for c in schema.cardinalities], axis=1)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d)) + y[:, None]
    return Dataset(schema, np.arange(n), X, y, attrs, (domain,) * n)


@pytest.fixture
def small_ds():
    return make_dataset()


@pytest.fixture(scope="session")
def small_scm():
    return ScmConfig(n_train=600, n_test=400, seed=3)


@pytest.fixture(scope="session")
def small_data(small_scm):
    return generate(small_scm)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
