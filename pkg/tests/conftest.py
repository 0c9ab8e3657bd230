"""Suite-wide switches: verify every packing built anywhere in the test run,
and echo acceptance PASS/FAIL lines after the summary table."""

import os

os.environ.setdefault("FRACTALMST_VERIFY_PACKINGS", "1")

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
