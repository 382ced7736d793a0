import random

import pytest

from hpre import keygen, keypair_from_primes

ACCEPTANCE_FILE = "test_acceptance.py"
_acceptance_results = []


@pytest.fixture
def rng():
    return random.Random(20161205)


@pytest.fixture(scope="session")
def key35():
    return keypair_from_primes(5, 7, test_mode=True)


@pytest.fixture(scope="session")
def key16():
    """16-bit test key, n = 181 * 233."""
    return keypair_from_primes(181, 233, test_mode=True)


@pytest.fixture(scope="session")
def key16b():
    return keypair_from_primes(163, 239, test_mode=True)


@pytest.fixture(scope="session")
def keys256():
    r = random.Random(256)
    return keygen(256, r), keygen(256, r)


def pytest_runtest_logreport(report):
    if report.when == "call" and ACCEPTANCE_FILE in report.nodeid:
        _acceptance_results.append(report)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for report in _acceptance_results:
        name = report.nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if report.passed else 'FAIL'}  {name}")
