from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from implcheck.protocol import load_protocol

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus():
    return CORPUS


def load(name):
    return load_protocol(CORPUS / name)


@pytest.fixture(scope="session")
def p_sc():
    return load("p_sc.gclts")


@pytest.fixture(scope="session")
def p_rc():
    return load("p_rc.gclts")


@pytest.fixture(scope="session")
def p_nmc():
    return load("p_nmc.gclts")


@pytest.fixture(scope="session")
def bidders():
    return load("two_bidder_finite.gclts")


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
