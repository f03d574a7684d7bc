import pytest

_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record ``(label, ok, detail)`` for the acceptance summary, then assert it."""

    def record(label: str, ok: bool, detail: str) -> None:
        _RESULTS.append((label, bool(ok), detail))
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_RESULTS, key=lambda r: _order(r[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")


def _order(label: str):
    head = label.split()[0]
    return (int("".join(c for c in head if c.isdigit()) or 0), label)
