from __future__ import annotations

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report(capsys):
    """Print one PASS/FAIL line for a criterion and fail the test on FAIL."""

    def report(number: int, checks: list[tuple[str, bool]]) -> None:
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{'ok' if passed else 'NOT OK'}: {text}" for text, passed in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
