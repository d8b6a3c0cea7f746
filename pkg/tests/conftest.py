import numpy as np
import pytest
from scipy.linalg import expm

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def oracle_unitary(b1, b2, b3, theta):
    """Gate-by-gate matrix exponentials; shares no code with the package."""
    rot = lambda gen, a: expm(-0.5j * a * gen)
    return rot(X, theta) @ rot(Z, b3) @ rot(Y, b2) @ rot(Z, b1) @ H


def oracle_z(b1, b2, b3, theta):
    psi = oracle_unitary(b1, b2, b3, theta)[:, 0]
    return float(np.real(np.conj(psi) @ Z @ psi))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
