import numpy as np
import pytest

from lvselect.model import FIG1A, FIG1B, ParameterState


@pytest.fixture
def truth_a():
    return ParameterState.base_model(FIG1A)


@pytest.fixture
def truth_b():
    return ParameterState.base_model(FIG1B)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ------------------------------------------------------

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call" and not report.failed:
        return
    n = marker.args[0]
    detail = dict(item.user_properties).get("detail", "")
    if report.when == "call" or n not in _ACCEPTANCE:
        _ACCEPTANCE[n] = ("PASS" if report.passed else "FAIL", item.name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, name, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {name}  {detail}".rstrip())
