import numpy as np
import pytest

from clsklab import design


@pytest.fixture(scope="session")
def ex1():
    return design.builtin("example1")


@pytest.fixture(scope="session")
def ex2():
    return design.builtin("example2")


@pytest.fixture(scope="session")
def xi1(ex1):
    return ex1.symbols[0].xi


@pytest.fixture(scope="session")
def xi2(ex1):
    return ex1.symbols[1].xi


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def verdict():
    """Record one pass/fail line per acceptance criterion."""

    def record(name, passed, detail):
        _ACCEPTANCE.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
