import pytest

from fhsim.controller import ConfigCatalog
from fhsim.fronthaul import LinkParams
from fhsim.phy_model import CellConfig, TddPattern, UeProfile
from fhsim.scenario_file import load_scenario

MBPS = 1e6

ACCEPTANCE_LINES = []


@pytest.fixture
def cell1():
    return CellConfig("config1", 200, 4)


@pytest.fixture
def cell2():
    return CellConfig("config2", 100, 4)


@pytest.fixture
def cell3():
    return CellConfig("config3", 100, 8)


@pytest.fixture
def ue():
    return UeProfile(2, 2, 6, 6)


@pytest.fixture
def tdd():
    return TddPattern("DDDSU", (10, 2, 2), False)


@pytest.fixture
def link():
    return LinkParams()


@pytest.fixture
def catalog(cell1, cell2, cell3):
    return ConfigCatalog((cell1, cell2, cell3))


@pytest.fixture(scope="session")
def default_scenario():
    return load_scenario("default.scenario")


@pytest.fixture(scope="session")
def tiny_scenario():
    return load_scenario("tiny.scenario")


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
