import pytest

from iotag import corridor_path
from iotag.scenario import parse_scenario
from iotag.temporal import evaluate_schedule


@pytest.fixture(scope="session")
def corridor_file():
    return corridor_path()


@pytest.fixture(scope="session")
def corridor(corridor_file):
    return parse_scenario(corridor_file.read_text())


@pytest.fixture(scope="session")
def camera_left(corridor):
    return evaluate_schedule(corridor, {"camera": "left"})


@pytest.fixture(scope="session")
def camera_right(corridor):
    return evaluate_schedule(corridor, {"camera": "right"})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
