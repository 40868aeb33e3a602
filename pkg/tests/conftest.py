import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store a one-line verdict for the acceptance summary."""

    def _record(criterion, passed, detail):
        ACCEPTANCE[criterion] = (bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
