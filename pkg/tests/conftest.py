import numpy as np
import pytest

from fluxatom.model import Drive, HPModel


def lindblad_affine_map(gens):
    """Affine map (M, c) with d/dt (u, v, conj v) = M (u, v, conj v) + c, read off the Liouvillian."""

    def vec(r):
        return np.array([r[0, 0], r[0, 1], r[1, 0]])

    def rho(x):
        return np.array([[x[0], x[1]], [x[2], 1 - x[0]]], dtype=complex)

    c = vec(gens.liouvillian(rho(np.zeros(3))))
    M = np.column_stack([vec(gens.liouvillian(rho(e))) - c for e in np.eye(3)])
    return M, c


@pytest.fixture
def trivial_model():
    return HPModel(1.0, [1.0], [[1.0]], [[1.0]])


@pytest.fixture
def undriven(trivial_model):
    return Drive([0.0], 1.0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
