import pytest

from groupfisher import AbeBorgesRoditi, Boltzmann, Kaniadakis, Tsallis

ACCEPTANCE_LINES: list[str] = []

CLASS_GRID = [Boltzmann(), Tsallis(0.5), Tsallis(1.5), Kaniadakis(0.3), AbeBorgesRoditi(0.2, 0.3)]


@pytest.fixture(params=CLASS_GRID, ids=lambda c: c.label())
def group_class(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
