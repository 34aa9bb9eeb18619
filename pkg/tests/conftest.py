import pytest

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        verdict, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{verdict}] criterion {key}: {detail}")


@pytest.fixture
def acceptance():
    return ACCEPTANCE
