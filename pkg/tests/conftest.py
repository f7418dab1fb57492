import numpy as np
import pytest

from helpers import small_taxonomy
from ppkit.taxonomy import load_shipped_taxonomy


@pytest.fixture(scope="session")
def shipped_taxonomy():
    return load_shipped_taxonomy()


@pytest.fixture
def taxonomy():
    return small_taxonomy()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines: list[str] = []
    request.config._acceptance_lines = lines
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
