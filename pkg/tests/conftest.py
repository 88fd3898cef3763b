import sys
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from xem import XEMParams, fit_xem, generate_synthetic, train_test_split
from xem.lce import LCEParams

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "xem", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("xem")

DATA_SEED = 1

# wall-clock seconds of the session model fits, keyed by fixture name
FIT_SECONDS: dict[str, float] = {}


def _timed_fit(name, train, params):
    start = time.perf_counter()
    model = fit_xem(train, params, seed=0)
    FIT_SECONDS[name] = time.perf_counter() - start
    return model


@pytest.fixture(scope="session")
def synthetic():
    """The 20-series square-pulse dataset and its 50/50 split."""
    data = generate_synthetic(10, 100, 60, 20, 1, seed=DATA_SEED)
    train, test = train_test_split(data)
    return data, train, test


@pytest.fixture(scope="session")
def model_w20(synthetic):
    _, train, _ = synthetic
    return _timed_fit("model_w20", train, XEMParams(20, LCEParams(10, 1)))


@pytest.fixture(scope="session")
def model_w2(synthetic):
    _, train, _ = synthetic
    return _timed_fit("model_w2", train, XEMParams(2, LCEParams(10, 1)))


@pytest.fixture(scope="session")
def fit_seconds():
    return FIT_SECONDS


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[n])
