import pytest

_ACCEPTANCE = []


@pytest.fixture
def record():
    """Register one acceptance line: record(tag, passed, detail)."""

    def add(tag, passed, detail):
        _ACCEPTANCE.append((tag, bool(passed), detail))
        return bool(passed)

    return add


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag, passed, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{tag} {'PASS' if passed else 'FAIL'}: {detail}")
