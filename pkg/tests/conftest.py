import numpy as np
import pytest

from chaos_swr import from_dense


@pytest.fixture
def ones4():
    return from_dense(np.ones((4, 4)))


@pytest.fixture
def pair2():
    return from_dense([[0.0, 1.0], [1.0, 0.0]])


def random_matrix(n, seed, symmetric=False):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    if symmetric:
        a = (a + a.T) / 2
    return from_dense(a)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
