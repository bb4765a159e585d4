"""Shared pytest hooks.

The acceptance tests record one scorecard line per criterion; printing them
from inside the tests would be swallowed by output capture for passing
tests, so they are replayed in the terminal summary instead.
"""

CRITERION_LINES = []


def record_criterion(line: str) -> None:
    CRITERION_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
