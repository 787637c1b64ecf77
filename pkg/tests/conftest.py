import pytest

from blockage_geom.model import BASELINE


@pytest.fixture
def baseline():
    return BASELINE


def pytest_terminal_summary(terminalreporter):
    from _helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
