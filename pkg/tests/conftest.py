from __future__ import annotations

import re

import pytest

from simplicial_reduction import SimplicialComplex

ACCEPTANCE_FILE = "test_acceptance.py"


@pytest.fixture
def loop_complex() -> SimplicialComplex:
    return SimplicialComplex([(0, 1, 2), (1, 4), (2, 3), (3, 4)])


@pytest.fixture
def flap_complex() -> SimplicialComplex:
    return SimplicialComplex([(0, 1, 2, 3), (1, 3, 4)])


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if ACCEPTANCE_FILE not in nodeid or (rep.when != "call" and outcome != "error"):
                continue
            m = re.search(r"test_criterion_(\d+)_(\w+)", nodeid)
            if m:
                lines.append((int(m.group(1)), m.group(2), "PASS" if outcome == "passed" else "FAIL"))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, verdict in sorted(set(lines)):
        terminalreporter.write_line(f"criterion {num:2d} {verdict}  {name}")
