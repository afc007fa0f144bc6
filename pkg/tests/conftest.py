from fractions import Fraction

import pytest

from ordinalpower.matrix_core import MarginalPair

F = Fraction


@pytest.fixture
def case1():
    return MarginalPair((F(3, 10), F(7, 10)), (F(3, 5), F(2, 5)))


@pytest.fixture
def case3():
    return MarginalPair((F(1, 4), F(1, 4), F(1, 2)), (F(2, 5), F(2, 5), F(1, 5)))


_acceptance: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::test_criterion_" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
