import pytest

from ppc_auctions.env import fixed_env

# three ads, best ad 0 with eCPM 0.9 against 0.4 and 0.35
A1_CTRS = (0.9, 0.8, 0.7)
A1_VALUES = (1.0, 0.5, 0.5)


@pytest.fixture
def a1_env():
    def make(T):
        return fixed_env(A1_CTRS, A1_VALUES, T)

    return make


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(name: str, ok: bool, detail: str):
        line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
