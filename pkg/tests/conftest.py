"""Shared pytest plumbing for the acceptance suite.

Acceptance tests register a one-line verdict per criterion via
``record_acceptance``; a terminal-summary hook prints the collected lines
as a single block at the end of the run so the pass/fail status of every
criterion is visible in one place regardless of test ordering.
"""

from __future__ import annotations

import functools

# criterion number -> (status, detail); THROUGHPUT_KEY holds the reported
# (not criterion-numbered) throughput smoke line.
ACCEPTANCE_LINES: dict[int, tuple[str, str]] = {}
THROUGHPUT_KEY = 11


def record_acceptance(criterion: int, status: str, detail: str) -> None:
    """Record the verdict for one acceptance criterion."""
    ACCEPTANCE_LINES[criterion] = (status, detail)


def acceptance(criterion: int):
    """Decorator for acceptance tests.

    The wrapped test returns its PASS detail string on success; any
    exception records a FAIL line (with the exception text) and is
    re-raised so pytest still reports the failure normally.
    """

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:  # noqa: BLE001 - report then re-raise
                record_acceptance(criterion, "FAIL", f"{type(exc).__name__}: {exc}")
                raise
            record_acceptance(criterion, "PASS", detail or "")
            return None

        return wrapper

    return deco


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE_LINES):
        status, detail = ACCEPTANCE_LINES[criterion]
        label = "THROUGHPUT" if criterion == THROUGHPUT_KEY else f"ACCEPTANCE {criterion}"
        terminalreporter.write_line(f"{label}: {status} — {detail}")
