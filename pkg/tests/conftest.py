"""Shared fixtures and the acceptance-criteria summary printer."""

import pytest

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def criterion():
    """Record one acceptance criterion outcome and assert it."""

    def record(name: str, passed: bool, detail: str = ""):
        _CRITERIA.append((name, bool(passed), detail))
        assert passed, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed, detail in _CRITERIA:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)
