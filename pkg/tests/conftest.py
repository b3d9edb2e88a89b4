import math

import numpy as np
import pytest

from mildar.model import ModelConfig, path_from_noise

# alpha chosen so that k_n = 3**alpha = 2 (up to one ulp) at n = 3
ALPHA_K2_N3 = math.log(2) / math.log(3)

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def hand_config():
    """theta_n = 1.1, rho_n = 1.05 at n = 3."""
    return ModelConfig(0.2, 0.1, alpha=ALPHA_K2_N3, n=3)


@pytest.fixture
def hand_path(hand_config):
    return path_from_noise(hand_config, np.array([1.0, -1.0, 2.0]))


@pytest.fixture
def zero_path():
    return path_from_noise(ModelConfig(1.0, 0.5, n=20), np.zeros(20))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    _ACCEPTANCE[number] = ("PASS" if report.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
