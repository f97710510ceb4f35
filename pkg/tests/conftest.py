import pytest

# filled by test_acceptance.py: criterion number -> (passed, detail)
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(number: int, passed: bool, detail: str):
        ACCEPTANCE[number] = (bool(passed), detail)
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
