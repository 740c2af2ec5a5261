from __future__ import annotations

import pytest

_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record an acceptance verdict, print it, and fail the test when it is red."""
    lines = request.config.stash.setdefault(_KEY, [])

    def record(number: int, ok: bool, detail: str, elapsed: float | None = None) -> None:
        took = "" if elapsed is None else f" [{elapsed:.1f} s]"
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}{took} {detail}"
        lines.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
