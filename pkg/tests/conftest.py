import pytest

from rvo.config import parse_config

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cfg():
    return parse_config({})


@pytest.fixture(scope="session")
def cell(cfg):
    return cfg.vapor_cell()


@pytest.fixture(scope="session")
def geom(cfg):
    return cfg.geometry()


@pytest.fixture(scope="session")
def gain(cfg):
    return cfg.gain_config()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
