import pytest

ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(criterion, passed, detail):
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
