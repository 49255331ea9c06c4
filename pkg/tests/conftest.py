import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def report_line():
    def emit(number, ok, detail):
        line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
