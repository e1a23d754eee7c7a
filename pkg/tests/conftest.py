import os
import sys

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py::test_criterion_" in rep.nodeid:
                name = rep.nodeid.split("::test_criterion_")[1]
                rows.append((name, outcome, rep.duration))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, outcome, dur in sorted(rows):
            num, _, label = name.partition("_")
            terminalreporter.write_line(f"criterion {int(num):2d} {label.replace('_', ' '):32s} "
                                        f"{'PASS' if outcome == 'passed' else 'FAIL'}  {dur:7.2f} s")
