import numpy as np
import pytest

from ofdmsm.core import derive_stream


@pytest.fixture
def rng() -> np.random.Generator:
    return derive_stream(20190516, 0)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion."""
    lines = request.config.stash[_VERDICTS]

    def record(name: str, ok: bool, detail: str) -> bool:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_VERDICTS]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
