import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Log one acceptance criterion's verdict; printed in the terminal summary."""

    def _record(number, title, passed, detail):
        ACCEPTANCE[number] = f"criterion {number} [{title}]: {'PASS' if passed else 'FAIL'} ({detail})"
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
