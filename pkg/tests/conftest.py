import math

import pytest

from packing_measure.families import FamilySpec, build
from packing_measure.ifs import IFSSystem, Similitude


def gasket(r):
    return build(FamilySpec("sierpinski_gasket", r))


@pytest.fixture
def gasket_third():
    return gasket(1 / 3)


@pytest.fixture
def two_ratio_line():
    # Ratios 1/2 and 1/4 on the line; gap between [0, 1/2] and [3/4, 1] is 1/4.
    return IFSSystem((Similitude.homothety(0.5, [0.0]), Similitude.homothety(0.25, [0.75])))


def golden_y():
    return (math.sqrt(5) - 1) / 2


_criteria = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        detail = dict(report.user_properties).get("detail", "")
        _criteria[report.nodeid.split("::")[-1]] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda n: int(n.split("_")[2])):
        outcome, detail = _criteria[name]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}")
