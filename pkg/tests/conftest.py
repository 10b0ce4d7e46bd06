"""Shared pytest plumbing: the acceptance verdict board.

Acceptance tests push one "A-n PASS/FAIL" line each onto ``VERDICTS``;
echoing them from the terminal-summary hook keeps them visible in normal
captured runs, where in-test prints of passing tests are swallowed.
"""

VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
