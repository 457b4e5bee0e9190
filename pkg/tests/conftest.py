import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for the acceptance summary."""

    def emit(number, measured, tolerance, passed, detail=""):
        flag = "PASS" if passed else "FAIL"
        line = f"criterion {number:>2}: {flag}  {measured} vs {tolerance}"
        if detail:
            line += f"  ({detail})"
        print(line)
        _LINES.append(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
