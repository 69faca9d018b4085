import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from turnout import _backend  # noqa: E402


@pytest.fixture(params=_backend.available())
def kern(request):
    """Each kernel backend that can be imported in this environment."""
    return _backend.load(request.param)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion."""

    def record(name, ok, detail):
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
