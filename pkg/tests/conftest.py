import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def mc_z(samples, exact):
    """z-score of a sample mean against its exact value."""
    s = np.asarray(samples, dtype=float)
    return (s.mean() - exact) / (s.std(ddof=1) / np.sqrt(s.size))


ACCEPTANCE = []  # filled by test_acceptance.py: one line per criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
