import numpy as np
import pytest

from smoothanova.models import Dataset

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unbalanced(rng):
    """Three normal groups of sizes 12, 20, 31 with distinct means and scales."""
    return Dataset.from_groups(
        [
            3.0 + 1.0 * rng.standard_normal(12),
            -1.0 + 2.5 * rng.standard_normal(20),
            10.0 + 0.5 * rng.standard_normal(31),
        ],
        labels=["a", "b", "c"],
    )
