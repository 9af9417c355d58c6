import pytest

from snoopsim._backend import KERNELS

BACKENDS = sorted(KERNELS)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line, then assert it."""
    lines = request.config.stash[ACCEPTANCE]

    def check(label, ok, detail):
        lines.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
