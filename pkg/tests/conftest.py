import numpy as np
import pytest

from hidim.datagen import RandomSource


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def source():
    return RandomSource(7)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, title, lines, seconds = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title} ({seconds:.0f}s)")
        for line in lines:
            terminalreporter.write_line(line)
