import pytest

# Lines recorded by the acceptance suite, echoed after the run so they
# survive pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def record(number, passed, detail):
        line = f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
