import pytest


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture
def record_criterion(request):
    """Store one PASS/FAIL line for the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        request.config._acceptance[number] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance", {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        ok, detail = lines[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
