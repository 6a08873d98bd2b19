import pytest

from cmodel.model import build_common_complete_model
from cmodel.space import SubsetFamily, Universe, parse_bits


def bitset(*strings):
    return frozenset(parse_bits(s) for s in strings)


@pytest.fixture
def worked_family():
    return SubsetFamily(
        Universe.full(4),
        {
            "C1": bitset("0010", "0101", "1000", "1100"),
            "C2": bitset("0110", "1111"),
            "C3": bitset("0111", "1001"),
        },
    )


@pytest.fixture
def worked_model(worked_family):
    return build_common_complete_model(worked_family, pad=False)


@pytest.fixture
def three_bit_c():
    return [parse_bits(s) for s in ("001", "010", "100", "111")]


_acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        _acceptance_lines.append(f"{status}  {name}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
