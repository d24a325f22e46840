import pytest

from airyline.rng import RngStream

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def stream():
    return RngStream(20240611)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.hookimpl(tryfirst=True)
def pytest_collection_modifyitems(config, items):
    for item in items:
        if "acceptance" in item.nodeid:
            item.add_marker(pytest.mark.acceptance)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
