import numpy as np
import pytest

from fobprint import harness
from fobprint.signal import ModulationScheme
from fobprint.synth import ReceiverConfig

_CRITERIA = {}


@pytest.fixture
def fsk():
    return ModulationScheme.fsk()


@pytest.fixture
def ask():
    return ModulationScheme.ask()


@pytest.fixture
def rx():
    return ReceiverConfig()


@pytest.fixture
def fob():
    return harness.default_device()


@pytest.fixture
def channel():
    return harness.default_channel()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def experiment_cache():
    """Feature batches and models shared by every end-to-end test."""
    return {}


@pytest.fixture(scope="session")
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n])
