import sys

import pytest

from safesec import load_corpus
from safesec.solutions import gather_candidates

SAFETY_EXPLORE = {"dualSelfCheckingPairFS", "heterogeneousDuplexFS", "monitorActuator", "watchdog"}
SECURITY_EXPLORE = {"firewall", "securityMonitor"}


@pytest.fixture(scope="session")
def headlamp():
    return load_corpus("headlamp")


@pytest.fixture(scope="session")
def headlamp_dsl():
    return load_corpus("headlamp_dsl")


@pytest.fixture(scope="session")
def headlamp_candidates(headlamp):
    cands, _ = gather_candidates(headlamp, SAFETY_EXPLORE, SECURITY_EXPLORE)
    return cands


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
