"""Shared pytest plumbing: surface the acceptance criterion lines.

The acceptance tests register one PASS/FAIL line per criterion; printing them
again in the terminal summary makes them visible even when output capture is
on.
"""

_criterion_lines: list[str] = []


def register_criterion_line(line: str) -> None:
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter) -> None:
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
