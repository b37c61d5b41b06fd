"""Shared test infrastructure: the acceptance-verdict ledger.

Acceptance tests record one PASS/FAIL line each; the lines are echoed in the
terminal summary so they survive output capture.
"""

VERDICTS: list[str] = []


def record_verdict(line: str) -> None:
    VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in VERDICTS:
        terminalreporter.write_line(line)
