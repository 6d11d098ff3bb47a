import pytest

RESULTS: list = []


@pytest.fixture
def report_line():
    def record(number: int, ok: bool, text: str) -> None:
        RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}")

    return record


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
