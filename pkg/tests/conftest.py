import json
import os

import pytest

_HERE = os.path.dirname(__file__)
_ACCEPTANCE = []


@pytest.fixture(scope="session")
def frozen():
    """High-precision reference values from tests/oracles/compute_oracles.py."""
    with open(os.path.join(_HERE, "oracles", "frozen.json")) as fh:
        return {k: float(v) for k, v in json.load(fh).items()}


@pytest.fixture
def record():
    """Record one acceptance line: ``record(criterion, passed, detail)``."""

    def _record(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
