"""Shared test configuration.

The acceptance suite registers one verdict per criterion here; the
terminal summary prints them as a compact pass/fail checklist after
the normal pytest output.
"""

from __future__ import annotations

# criterion id -> (passed, one line of detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)
    assert passed, f"criterion {criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[criterion]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {criterion}: {verdict} - {detail}")
