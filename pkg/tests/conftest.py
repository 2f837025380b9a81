import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit(rng, n, complex_=True):
    v = rng.normal(size=n)
    if complex_:
        v = v + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
