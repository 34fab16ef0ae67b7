import math

import pytest

from thinfilm import field_energy as fe
from thinfilm.params import LOWER_BOUND_CONSTANT

LOWER_BOUND_SLACK = 0.01

# every F_eps breakdown evaluated during the session, reduced to its worst ratio
lower_bound_tally = {"fields": 0, "worst": math.inf, "violations": []}

# acceptance verdicts, filled by test_acceptance.py and printed at the end
acceptance_lines = {}


def _observe(m, b):
    ratio = b.F_eps / b.area
    lower_bound_tally["fields"] += 1
    lower_bound_tally["worst"] = min(lower_bound_tally["worst"], ratio)
    if ratio < -(LOWER_BOUND_CONSTANT + LOWER_BOUND_SLACK):
        lower_bound_tally["violations"].append(ratio)


@pytest.fixture(autouse=True)
def universal_lower_bound():
    """Every field evaluated in any test obeys F_eps >= -(pi^2 e/4 + 0.01)|Omega|."""
    before = len(lower_bound_tally["violations"])
    fe.add_energy_observer(_observe)
    yield
    fe.remove_energy_observer(_observe)
    new = lower_bound_tally["violations"][before:]
    assert not new, f"lower bound violated: F/|Omega| = {min(new)}"


def pytest_terminal_summary(terminalreporter):
    if not acceptance_lines:
        return
    if "06" in acceptance_lines:
        t = lower_bound_tally
        ok = not t["violations"]
        acceptance_lines["06"] = (f"[{'PASS' if ok else 'FAIL'}] 6 universal lower bound: {t['fields']} fields in the session, "
                                  f"worst F/|Omega| = {t['worst']:.4g} >= {-(LOWER_BOUND_CONSTANT + LOWER_BOUND_SLACK):.4g}")
    terminalreporter.section("acceptance criteria")
    for k in sorted(acceptance_lines):
        terminalreporter.write_line(acceptance_lines[k])
