import numpy as np
import pytest

from kgsolve.cli import random_su
from kgsolve.linalg import su_log
from kgsolve import pauli

# lines recorded by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_element(n, scale, rng):
    return pauli.LieElement(n, rng.uniform(-scale, scale, pauli.dim(n)))


def generator_of(G, n):
    return pauli.from_matrix(su_log(G), n, tol=1e-6)


__all__ = ["random_su", "random_element", "generator_of", "ACCEPTANCE_LINES"]
