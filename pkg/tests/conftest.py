"""Collects one verdict line per acceptance criterion and prints them at the end."""

RESULTS = {}


def record(number, passed, detail):
    RESULTS[number] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        passed, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
