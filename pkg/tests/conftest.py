"""Shared pytest plumbing.

The acceptance tests register one PASS/FAIL line each; printing them from a
terminal-summary hook keeps the scoreboard visible in every run mode,
including captured runs where in-test printing would be swallowed.
"""

SCOREBOARD: list[str] = []


def record_scoreboard_line(line: str) -> None:
    SCOREBOARD.append(line)


def pytest_terminal_summary(terminalreporter):
    if SCOREBOARD:
        terminalreporter.section("acceptance scoreboard")
        for line in SCOREBOARD:
            terminalreporter.line(line)
