import numpy as np
import pytest

from procopt import gell_mann_basis, ProcessMatrix


@pytest.fixture(scope="session")
def gm3():
    return gell_mann_basis(3)


def random_unitary(rng, dim=3):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_valid_chi(rng, basis):
    """Random Hermitian PSD matrix with trace N (a valid dynamical variable)."""
    n2 = basis.size
    a = rng.normal(size=(n2, n2)) + 1j * rng.normal(size=(n2, n2))
    chi = a @ a.conj().T
    chi *= basis.dim / np.trace(chi).real
    return ProcessMatrix(basis=basis, data=chi)
