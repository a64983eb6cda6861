import pytest

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def report():
    def record(n: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE[n] = (bool(passed), detail)
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
