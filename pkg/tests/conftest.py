import math

import numpy as np
import pytest

from qmeter.core import Observable, PureState


@pytest.fixture
def biased_qubit():
    """The (sqrt 0.3, sqrt 0.7) state used throughout the statistical checks."""
    return PureState(np.array([math.sqrt(0.3), math.sqrt(0.7)]))


@pytest.fixture
def pauli_z():
    return Observable(np.array([1.0, -1.0]))


def random_state(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState.normalized(v)


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (a + a.conj().T)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    """Remember one acceptance verdict and print it (visible with ``-s``)."""
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
