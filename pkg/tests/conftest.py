import pytest

VERDICTS = []


@pytest.fixture
def verdict(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        VERDICTS.append(line)
        reporter = request.config.pluginmanager.getplugin("terminalreporter")
        if reporter is not None and request.config.getoption("verbose") > 0:
            reporter.write_line("")
            reporter.write_line(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
