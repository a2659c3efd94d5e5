from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# (criterion, status, detail) lines filled in by test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def fixtures():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, detail in sorted(ACCEPTANCE, key=lambda r: (int(str(r[0]).rstrip("b")), str(r[0]))):
        terminalreporter.write_line(f"criterion {num}: {status} - {detail}")
