"""Shared test configuration.

Property-based tests use a moderate example budget with the deadline
disabled: individual examples run adaptive integrations whose wall time
varies too much for hypothesis's per-example timing to be meaningful.
"""

import sys

from hypothesis import HealthCheck, settings

settings.register_profile(
    "qshje",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qshje")


def pytest_terminal_summary(terminalreporter):
    """Replay the acceptance gate's one-line verdicts after the run."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.line(line)
