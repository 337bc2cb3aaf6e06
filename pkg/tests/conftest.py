from __future__ import annotations

# Acceptance rows collected during the run, echoed once at the end.
ACCEPTANCE_ROWS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_ROWS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_ROWS:
        terminalreporter.write_line(line)
