"""Shared pytest hooks for the test suite.

The acceptance module records one verdict line per numbered criterion in
its REPORT_LINES global. After the run those lines are echoed in a block
of their own so the per-criterion outcome is visible without digging
through individual test results.
"""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = (sys.modules.get("test_acceptance")
           or sys.modules.get("tests.test_acceptance"))
    lines = getattr(mod, "REPORT_LINES", None) if mod else None
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
