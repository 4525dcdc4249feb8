import pytest

from hmtsinr import channel, hexmod

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def system():
    return hexmod.LatticeParams.hexagonal(1e-4, 25e3)


@pytest.fixture(scope="session")
def scat():
    def make(theta):
        return channel.scattering_for_csf(theta, "fixed_doppler", f_d=600.0)
    return make


@pytest.fixture
def record():
    """Append a pass/fail line for the acceptance summary."""
    def add(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
