"""Orthonormal operator bases for the N^2-dimensional operator space.

Every matrix representation in this package (process matrices, embedded
Hamiltonians, superoperators) is pinned to an ordered orthonormal operator
basis {C_lambda} with Tr[C_lambda^dag C_mu] = delta_lambda_mu.  Two kinds are
provided: a generalized Gell-Mann basis (traceless Hermitian elements first,
identity last) and the logical basis {|i><j|} in row-major order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

ORTHONORMALITY_TOL = 1e-12


class BasisKind(enum.Enum):
    GELL_MANN = "gell_mann"
    LOGICAL = "logical"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class OperatorBasis:
    """Ordered orthonormal basis of N^2 operators on an N-dimensional space.

    Attributes:
        dim: Hilbert-space dimension N.
        elements: array of shape (N^2, N, N) holding the basis matrices.
        kind: construction family (Gell-Mann or logical).
    """

    dim: int
    elements: np.ndarray
    kind: BasisKind

    def __post_init__(self):
        n2 = self.dim * self.dim
        if self.elements.shape != (n2, self.dim, self.dim):
            raise ValueError(
                f"expected {n2} matrices of shape ({self.dim},{self.dim}), "
                f"got array of shape {self.elements.shape}"
            )
        gram = np.einsum("aij,bij->ab", self.elements.conj(), self.elements)
        err = np.max(np.abs(gram - np.eye(n2)))
        if err > ORTHONORMALITY_TOL:
            raise ValueError(f"basis is not orthonormal (max deviation {err:.3e})")
        _readonly(self.elements)

    @property
    def size(self) -> int:
        return self.dim * self.dim


@dataclass(frozen=True)
class BasisChange:
    """Unitary connecting two operator bases of the same dimension.

    ``matrix[a, b] = Tr[C_a^dag Ctilde_b]`` with C_a from the source basis and
    Ctilde_b from the destination basis.  ``apply`` conjugates a process
    matrix from the source representation into the destination one.
    """

    matrix: np.ndarray

    def __post_init__(self):
        n = self.matrix.shape[0]
        err = np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(n)))
        if err > ORTHONORMALITY_TOL:
            raise ValueError(f"basis-change matrix is not unitary (deviation {err:.3e})")
        _readonly(self.matrix)

    def apply(self, chi: np.ndarray) -> np.ndarray:
        """Convert a process-matrix representation: chi -> U^dag chi U."""
        u = self.matrix
        return u.conj().T @ chi @ u

    def reverse(self, chi: np.ndarray) -> np.ndarray:
        """Inverse conversion: chi -> U chi U^dag."""
        u = self.matrix
        return u @ chi @ u.conj().T


def gell_mann_basis(dim: int) -> OperatorBasis:
    """Generalized Gell-Mann basis, orthonormalized, identity element last.

    Ordering: symmetric off-diagonal block, antisymmetric off-diagonal block,
    diagonal (traceless) block, then identity/sqrt(N).  The first N^2 - 1
    elements are traceless Hermitian; all satisfy Tr[C_a^dag C_b] = delta_ab.
    For dim = 2 this reduces to the Pauli matrices over sqrt(2).
    """
    if dim < 2:
        raise ValueError(f"basis dimension must be >= 2, got {dim}")
    mats = []
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = 1.0
            m[k, j] = 1.0
            mats.append(m / np.sqrt(2.0))
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = -1.0j
            m[k, j] = 1.0j
            mats.append(m / np.sqrt(2.0))
    for l in range(1, dim):
        d = np.zeros(dim)
        d[:l] = 1.0
        d[l] = -float(l)
        mats.append(np.diag(d).astype(complex) / np.sqrt(l * (l + 1.0)))
    mats.append(np.eye(dim, dtype=complex) / np.sqrt(dim))
    return OperatorBasis(dim=dim, elements=np.array(mats), kind=BasisKind.GELL_MANN)


def logical_basis(dim: int) -> OperatorBasis:
    """Logical basis {|i><j|} in row-major (i, j) order."""
    if dim < 2:
        raise ValueError(f"basis dimension must be >= 2, got {dim}")
    mats = np.zeros((dim * dim, dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            mats[i * dim + j, i, j] = 1.0
    return OperatorBasis(dim=dim, elements=mats, kind=BasisKind.LOGICAL)


def basis_change(src: OperatorBasis, dst: OperatorBasis) -> BasisChange:
    """Unitary with entries Tr[C_a^dag Ctilde_b] mapping src -> dst representations."""
    if src.dim != dst.dim:
        raise ValueError(f"basis dimensions differ: {src.dim} vs {dst.dim}")
    u = np.einsum("aij,bij->ab", src.elements.conj(), dst.elements)
    return BasisChange(matrix=u)


def embed_operator(y: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Embed an N x N operator into the N^2 x N^2 operator-space representation.

    Returns the matrix with entries Tr[C_a^dag Y C_b].  The embedding is an
    algebra homomorphism (products and adjoints carry over), so Hermitian
    inputs embed to Hermitian matrices.
    """
    y = np.asarray(y, dtype=complex)
    if y.shape != (basis.dim, basis.dim):
        raise ValueError(f"operator shape {y.shape} does not match basis dim {basis.dim}")
    return np.einsum("lba,bc,mca->lm", basis.elements.conj(), y, basis.elements)


def vectorize(m: np.ndarray) -> np.ndarray:
    """Row-major stacking |M>> of a square matrix.

    Satisfies <<X|Y>> = Tr[X^dag Y] and vec(X Y Z) = (X kron Z^T) vec(Y).
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m.reshape(-1)


def devectorize(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v)
    k = int(round(np.sqrt(v.size)))
    if k * k != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(k, k)
