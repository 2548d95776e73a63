import pytest

_ACCEPTANCE = []


@pytest.fixture
def record():
    """Log one acceptance line: record(number, ok, detail)."""

    def _record(number, ok, detail):
        _ACCEPTANCE.append((number, bool(ok), detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
