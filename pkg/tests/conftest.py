import pytest

from quasidecay.shooting import find_fast_decay


@pytest.fixture(scope="session")
def fast37():
    return find_fast_decay(3, 7.0)


@pytest.fixture(scope="session")
def fast45():
    return find_fast_decay(4, 5.0)


@pytest.fixture(scope="session")
def vf37(fast37):
    return fast37[1]


@pytest.fixture(scope="session")
def vf45(fast45):
    return fast45[1]


def pytest_terminal_summary(terminalreporter):
    from cases import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE, key=lambda row: row[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {title} ({detail})")
