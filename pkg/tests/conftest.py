import os

import numpy as np
import pytest

from ppdn.network import Edge, Network, VoltageState, load, router, source

ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0]))


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    ok = report.passed or report.skipped
    if report.when == "call" or not ok:
        ACCEPTANCE[crit] = ACCEPTANCE.get(crit, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ACCEPTANCE[crit] else 'FAIL'}")


@pytest.fixture
def rng():
    return np.random.default_rng(int(os.environ.get("PPDN_TEST_SEED", "20240611")))


@pytest.fixture
def chain():
    """Source 12 V -> router (10 V, 10 V) -> 10 ohm load, C = 1e-2 F, R = 0.1 ohm."""
    net = Network(
        [source(1, 12.0), router(2, 1e-2), load(3, 10.0)],
        [Edge(1, 2, 0.1), Edge(2, 3, 0.1)],
    )
    return net, VoltageState.initial(net, {2: [10.0, 10.0]})
