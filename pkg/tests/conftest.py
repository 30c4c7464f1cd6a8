import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from oblique_fv import build_mesh, generate_grid

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def uniform3():
    return build_mesh(generate_grid("cube", (3, 3, 3)))


@pytest.fixture(scope="session")
def uniform5():
    return build_mesh(generate_grid("cube", (5, 5, 5)))


@pytest.fixture(scope="session")
def perturbed5():
    return build_mesh(generate_grid("cube", (5, 5, 5), 0.15, 42))


@pytest.fixture(scope="session")
def perturbed4():
    return build_mesh(generate_grid("cube", (4, 4, 4), 0.15, 42))


@pytest.fixture(scope="session")
def tesseroid4():
    return build_mesh(generate_grid("tesseroid", (4, 4, 4), 0.15, 42))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
