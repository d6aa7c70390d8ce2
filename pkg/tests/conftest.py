import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line; the lines are echoed in the terminal summary."""

    def _report(name: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
