import pytest

# criterion number -> (ok, detail), filled by test_acceptance.py
CRITERIA: dict = {}


@pytest.fixture
def criterion():
    def record(k: int, ok: bool, detail: str):
        CRITERIA[k] = (bool(ok), detail)
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")
