import io
import os
from pathlib import Path

import pytest

from fibretool import cli

GOLDEN = Path(__file__).parent / "golden"

_CRITERIA = []


def run_cli(*argv, env=None):
    """Run the CLI in-process; returns (exit_code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    old = {}
    for key, value in (env or {}).items():
        old[key] = os.environ.get(key)
        os.environ[key] = value
    try:
        code = cli.run(list(argv), stdout=out, stderr=err)
    finally:
        for key, value in old.items():
            if value is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = value
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def golden():
    return GOLDEN


@pytest.fixture
def criterion():
    """Record one acceptance line; printed again in the terminal summary."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        print(line)
        _CRITERIA.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
