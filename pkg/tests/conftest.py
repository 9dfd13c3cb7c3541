import pytest

from streamsamp import Frame

_ACCEPTANCE: list[str] = []


@pytest.fixture
def frame_763():
    return Frame.from_pis([0.7, 0.6, 0.7], y=[1.0, 1.0, 1.0])


@pytest.fixture
def criterion():
    """Record a one-line verdict for the acceptance summary, then assert it."""

    def record(name: str, ok: bool, detail: str) -> None:
        _ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
