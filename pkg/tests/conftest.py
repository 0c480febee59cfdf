import numpy as np
import pytest

from akbrst.manifolds import AmbientStructure, get_manifold

BUILTIN_NAMES = ("flat_kahler", "sphere", "nilmanifold")


@pytest.fixture(scope="session")
def ambients():
    return {name: AmbientStructure(get_manifold(name)) for name in BUILTIN_NAMES}


@pytest.fixture(scope="session")
def nil(ambients):
    return ambients["nilmanifold"]


@pytest.fixture(scope="session")
def sphere(ambients):
    return ambients["sphere"]


@pytest.fixture(scope="session")
def flat(ambients):
    return ambients["flat_kahler"]


def max_abs(a) -> float:
    return float(np.max(np.abs(a)))


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = test_acceptance.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
