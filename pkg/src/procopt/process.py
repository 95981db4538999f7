"""Process matrices, their Choi-state correspondence, and feature measures.

The process matrix chi collects the Kraus-expansion coefficients of a CPTP
map in a fixed operator basis: E[rho] = sum_{lm} chi_lm C_l rho C_m^dag.
It is Hermitian, positive semidefinite, has trace N, and satisfies
Tr[chi^2] <= N^2 with equality exactly for unitary maps.  Purity and the
l1 coherence of a dynamics are both functions of chi; coherence is pinned
to the logical basis of the Choi state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import (
    BasisKind,
    OperatorBasis,
    basis_change,
    gell_mann_basis,
    logical_basis,
    vectorize,
)

HERMITICITY_TOL = 1e-9
TRACE_TOL = 1e-9
EIGENVALUE_FLOOR = -1e-8
PURITY_SLACK = 1e-8


class InvariantViolation(Exception):
    """A numeric invariant of the dynamical variable failed."""


@dataclass(frozen=True)
class ProcessMatrix:
    """The dynamical variable chi together with its defining basis."""

    basis: OperatorBasis
    data: np.ndarray

    def __post_init__(self):
        n2 = self.basis.size
        if self.data.shape != (n2, n2):
            raise ValueError(f"chi must be {n2}x{n2}, got {self.data.shape}")
        self.data.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def vec(self) -> np.ndarray:
        return vectorize(self.data)

    def validate(self) -> None:
        """Check Hermiticity, trace N, positivity, and the purity bound.

        Raises InvariantViolation on failure.  Validation is explicit rather
        than automatic so optimizer loops do not pay for eigendecompositions.
        """
        n = self.dim
        herm_err = np.max(np.abs(self.data - self.data.conj().T))
        if herm_err > HERMITICITY_TOL:
            raise InvariantViolation(f"chi not Hermitian: max |chi - chi^dag| = {herm_err:.3e}")
        tr_err = abs(np.trace(self.data) - n)
        if tr_err > TRACE_TOL:
            raise InvariantViolation(f"Tr[chi] deviates from {n} by {tr_err:.3e}")
        evals = np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))
        if evals.min() < EIGENVALUE_FLOOR:
            raise InvariantViolation(f"chi not PSD: min eigenvalue {evals.min():.3e}")
        pur2 = np.vdot(self.data, self.data).real
        if pur2 > n * n + PURITY_SLACK:
            raise InvariantViolation(f"Tr[chi^2] = {pur2:.6f} exceeds N^2 = {n * n}")


@dataclass(frozen=True)
class BlochVector:
    """Generalized Bloch coordinates of chi in the traceless operator basis.

    The N^4 - 1 real components r satisfy ||r||^2 = Tr[chi^2] - 1, so unitary
    maps sit on a sphere of radius sqrt(N^2 - 1).
    """

    r: np.ndarray
    basis: OperatorBasis  # Gell-Mann-type basis of the N^2-dimensional space

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.r))


def chi_from_unitary(u: np.ndarray, basis: OperatorBasis) -> ProcessMatrix:
    """Rank-one process matrix of the unitary map rho -> U rho U^dag.

    [chi_U]_{lm} = Tr[U C_l^dag] Tr[U C_m^dag]^*.
    """
    u = np.asarray(u, dtype=complex)
    n = basis.dim
    if u.shape != (n, n):
        raise ValueError(f"unitary shape {u.shape} does not match basis dim {n}")
    uerr = np.max(np.abs(u.conj().T @ u - np.eye(n)))
    if uerr > 1e-10:
        raise ValueError(f"input is not unitary (max |U^dag U - I| = {uerr:.3e})")
    coeffs = np.einsum("ab,lab->l", u, basis.elements.conj())
    return ProcessMatrix(basis=basis, data=np.outer(coeffs, coeffs.conj()))


def initial_process(dim: int, basis: OperatorBasis) -> ProcessMatrix:
    """Process matrix of the identity map (the propagation initial condition).

    For Gell-Mann-type bases with the identity element last this is
    chi_{lm}(t0) = N delta_{l,N^2} delta_{m,N^2}.
    """
    return chi_from_unitary(np.eye(dim), basis)


def choi_state(chi: ProcessMatrix) -> np.ndarray:
    """Choi-Jamiolkowski density matrix: convert to the logical basis, divide by N."""
    n = chi.dim
    if chi.basis.kind is BasisKind.LOGICAL:
        chi_log = chi.data
    else:
        chi_log = basis_change(chi.basis, logical_basis(n)).apply(chi.data)
    return chi_log / n


def purity(chi: ProcessMatrix) -> float:
    """Purity <<chi|chi>> / N^2; equals 1 exactly for unitary dynamics."""
    return float(np.vdot(chi.data, chi.data).real) / chi.dim**2


def coherence_l1(chi: ProcessMatrix) -> float:
    """Normalized l1 norm of the offdiagonal Choi-state entries (logical basis)."""
    n = chi.dim
    rho = choi_state(chi)
    a = np.abs(rho)
    return float(a.sum() - np.trace(a)) / (n * n - 1)


def bloch_operator_basis(dim: int) -> OperatorBasis:
    """Gell-Mann-type basis of the N^2-dimensional space used for Bloch coordinates."""
    return gell_mann_basis(dim * dim)


def bloch_decompose(chi: ProcessMatrix, mbasis: OperatorBasis | None = None) -> BlochVector:
    """Coordinates of chi in the traceless part of the N^2-dim Gell-Mann basis."""
    if mbasis is None:
        mbasis = bloch_operator_basis(chi.dim)
    comps = np.einsum("aij,ij->a", mbasis.elements.conj(), chi.data)
    return BlochVector(r=comps[:-1].real.copy(), basis=mbasis)


def bloch_reconstruct(bv: BlochVector, dim: int) -> np.ndarray:
    """Rebuild chi = (1/N) I + sum_a r_a M_a from Bloch coordinates."""
    mats = bv.basis.elements
    chi = np.eye(dim * dim, dtype=complex) / dim
    chi += np.einsum("a,aij->ij", bv.r.astype(complex), mats[:-1])
    return chi


def apply_process(chi: ProcessMatrix, rho: np.ndarray) -> np.ndarray:
    """Act the channel described by chi on a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (chi.dim, chi.dim):
        raise ValueError(f"state shape {rho.shape} does not match dim {chi.dim}")
    b = chi.basis.elements
    return np.einsum("lm,lab,bc,mdc->ad", chi.data, b, rho, b.conj())


def chi_to_text(chi: ProcessMatrix) -> str:
    """Plain-text dump: header line 'dim', then row-major lines of 're,im' pairs."""
    lines = [str(chi.dim)]
    for row in chi.data:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


def chi_from_text(text: str, basis: OperatorBasis) -> ProcessMatrix:
    """Parse the :func:`chi_to_text` format back into a ProcessMatrix."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    dim = int(lines[0])
    if dim != basis.dim:
        raise ValueError(f"dump is for dim {dim}, basis has dim {basis.dim}")
    n2 = dim * dim
    if len(lines) != 1 + n2:
        raise ValueError(f"expected {n2} matrix rows, found {len(lines) - 1}")
    data = np.empty((n2, n2), dtype=complex)
    for i, ln in enumerate(lines[1:]):
        pairs = ln.split()
        if len(pairs) != n2:
            raise ValueError(f"row {i} has {len(pairs)} entries, expected {n2}")
        for j, p in enumerate(pairs):
            re, im = p.split(",")
            data[i, j] = complex(float(re), float(im))
    return ProcessMatrix(basis=basis, data=data)
