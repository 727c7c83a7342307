import math

import pytest
from hypothesis import HealthCheck, settings

from weylsampl import analytic_basis, make_manifold

settings.register_profile(
    "repo", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def circle():
    return make_manifold("circle")


@pytest.fixture(scope="session")
def sphere():
    return make_manifold("sphere")


@pytest.fixture(scope="session")
def torus():
    return make_manifold("torus", lengths=(1.0, 1.0))


@pytest.fixture(scope="session")
def circle_basis(circle):
    return analytic_basis(circle, 10_000.0)


@pytest.fixture(scope="session")
def sphere_basis(sphere):
    return analytic_basis(sphere, 2500.0)


@pytest.fixture(scope="session")
def torus_basis(torus):
    return analytic_basis(torus, 40 * math.pi ** 2)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def record(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
