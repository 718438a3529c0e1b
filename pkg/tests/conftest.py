import pytest

from beccavity.physics import derive_params, paper_params


@pytest.fixture(scope="session")
def params():
    return paper_params()


@pytest.fixture(scope="session")
def derived(params):
    return derive_params(params)


# acceptance verdicts collected by tests/test_acceptance.py and printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
