"""Markovian master equation for process matrices and its propagators.

The Lindblad equation lifts to the process matrix with every operator
replaced by its operator-space embedding,

    dchi/dt = -i [H_emb, chi] + sum_a gamma_a (L_a chi L_a^dag
              - (1/2){L_a^dag L_a, chi}),

which in vectorized form reads d|chi>> / dt = -i K |chi>> with an
N^4 x N^4 generator K affine in the control fields.  Propagation uses the
exact per-interval matrix exponential, applied to the state vector through
a truncated-Taylor evaluation (the generator norm per step is small, so a
short Taylor sum reproduces the exponential to machine precision while
staying exactly trace-preserving in the continuous-equation sense).

A density-matrix-level propagator (N^2-dimensional Liouvillian, scipy
matrix exponentials) is kept as an independent oracle; reconstructing chi
from it through the Choi matrix cross-checks the lifted equation end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import OperatorBasis, basis_change, embed_operator, logical_basis
from .process import ProcessMatrix, initial_process

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [t0, tf] with `steps` piecewise-constant intervals."""

    t0: float
    tf: float
    steps: int

    def __post_init__(self):
        if self.tf <= self.t0:
            raise ValueError(f"tf must exceed t0, got [{self.t0}, {self.tf}]")
        if self.steps < 1:
            raise ValueError("steps must be positive")

    @property
    def dt(self) -> float:
        return (self.tf - self.t0) / self.steps

    def points(self) -> np.ndarray:
        """Grid points t_k, k = 0..steps."""
        return self.t0 + self.dt * np.arange(self.steps + 1)

    def midpoints(self) -> np.ndarray:
        """Interval midpoints where piecewise-constant fields are sampled."""
        return self.t0 + self.dt * (np.arange(self.steps) + 0.5)


@dataclass(frozen=True)
class ControlField:
    """Piecewise-constant real control field with update-shape metadata.

    `values[k]` applies on the interval [t_k, t_{k+1}).  `shape` holds the
    Krotov update-shape samples f_m on the same intervals and `weight` the
    step weight w_m; both ride along so the optimizer needs no extra wiring.
    """

    label: str
    values: np.ndarray
    shape: np.ndarray | None = None
    weight: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError(f"field '{self.label}' has non-finite samples")
        object.__setattr__(self, "values", v)
        if self.shape is not None:
            s = np.asarray(self.shape, dtype=float)
            if s.shape != v.shape:
                raise ValueError("shape samples must match field samples")
            if np.any(s < 0):
                raise ValueError("shape samples must be nonnegative")
            object.__setattr__(self, "shape", s)
        if not self.weight > 0:
            raise ValueError("field weight must be positive")

    def with_values(self, values: np.ndarray) -> "ControlField":
        return ControlField(self.label, values, self.shape, self.weight)


@dataclass(frozen=True)
class LindbladModel:
    """Drift + control Hamiltonians and jump operators of an open system."""

    dim: int
    basis: OperatorBasis
    drift: np.ndarray
    controls: tuple  # of (hamiltonian, label) pairs
    jumps: tuple  # of (operator, rate) pairs

    def __post_init__(self):
        for h, label in [(self.drift, "drift")] + [(h, lb) for h, lb in self.controls]:
            if np.max(np.abs(h - np.conj(h).T)) > HERMITICITY_TOL:
                raise ValueError(f"Hamiltonian '{label}' is not Hermitian")
        for _, rate in self.jumps:
            if rate < 0:
                raise ValueError("jump rates must be nonnegative")

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    def hamiltonian(self, values) -> np.ndarray:
        """H(t) = H0 + sum_m eps_m H_m for one set of field values."""
        h = self.drift.astype(complex).copy()
        for v, (hm, _) in zip(values, self.controls):
            h += v * hm
        return h


@dataclass(frozen=True)
class Superoperator:
    """Dense generator K acting on |chi>> via d|chi>>/dt = -i K |chi>>."""

    matrix: np.ndarray


class GeneratorParts:
    """Constant and per-control pieces of the vectorized generator.

    K(eps) = k0 + sum_m eps_m k_control[m]; the commutator pieces k_control
    are field independent, so the Krotov update derivative is these matrices.
    """

    def __init__(self, model: LindbladModel):
        n2 = model.basis.size
        eye = np.eye(n2)
        h0 = embed_operator(model.drift, model.basis)
        k0 = np.kron(h0, eye) - np.kron(eye, h0.T)
        diss = np.zeros((n2 * n2, n2 * n2), dtype=complex)
        for op, rate in model.jumps:
            lemb = embed_operator(op, model.basis)
            ldl = lemb.conj().T @ lemb
            diss += rate * (
                np.kron(lemb, lemb.conj())
                - 0.5 * np.kron(ldl, eye)
                - 0.5 * np.kron(eye, ldl.T)
            )
        self.k0 = k0 + 1j * diss
        self.k_control = []
        for hm, _ in model.controls:
            hemb = embed_operator(hm, model.basis)
            self.k_control.append(np.kron(hemb, eye) - np.kron(eye, hemb.T))
        self.size = n2 * n2


def build_generator(model: LindbladModel, values) -> Superoperator:
    """Generator K(eps) for one set of per-control field values."""
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size != model.n_controls:
        raise ValueError(f"expected {model.n_controls} field values, got {values.size}")
    parts = GeneratorParts(model)
    k = parts.k0.copy()
    for v, km in zip(values, parts.k_control):
        k += v * km
    return Superoperator(matrix=k)


def control_generator_derivative(model: LindbladModel, m: int) -> Superoperator:
    """Field-independent derivative dK/deps_m (commutator superoperator of H_m)."""
    if not 0 <= m < model.n_controls:
        raise ValueError(f"control index {m} out of range")
    return Superoperator(matrix=GeneratorParts(model).k_control[m])


# largest exponent 1-norm handled at each Taylor order so the truncation
# error ||A||^(m+1)/(m+1)! stays below double-precision noise
_TAYLOR_ORDERS = np.arange(3, 26)
_TAYLOR_BOUNDS = np.array(
    [(1e-17 * math.factorial(m + 1)) ** (1.0 / (m + 1)) for m in _TAYLOR_ORDERS]
)


class StepPropagator:
    """Applies exp(sign * i * K(eps) * dt) to vectors, one interval at a time.

    The per-interval exponent has small norm at the grid resolutions used
    here, so a truncated Taylor sum (with substepping as a safety net for
    large norms) evaluates the action to machine precision with a handful
    of matrix-vector products.
    """

    def __init__(self, parts: GeneratorParts, dt: float, sign: float = -1.0,
                 dagger: bool = False):
        k0 = parts.k0.conj().T if dagger else parts.k0
        kc = [k.conj().T if dagger else k for k in parts.k_control]
        self._a0 = (sign * 1j * dt) * k0
        self._ac = [(sign * 1j * dt) * k for k in kc]
        self._n0 = np.linalg.norm(self._a0, 1)
        self._nc = [np.linalg.norm(a, 1) for a in self._ac]
        n = self._a0.shape[0]
        self._abuf = np.empty_like(self._a0)
        self._mbuf = np.empty_like(self._a0)
        self._term = np.empty(n, dtype=complex)
        self._tnew = np.empty(n, dtype=complex)

    def _assemble(self, values) -> tuple[np.ndarray, float]:
        a = self._abuf
        np.copyto(a, self._a0)
        bound = self._n0
        for v, am, nm in zip(values, self._ac, self._nc):
            if v != 0.0:
                np.multiply(am, v, out=self._mbuf)
                a += self._mbuf
                bound += abs(v) * nm
        return a, bound

    @staticmethod
    def _order(bound: float) -> int:
        i = np.searchsorted(_TAYLOR_BOUNDS, bound)
        return int(_TAYLOR_ORDERS[min(i, len(_TAYLOR_ORDERS) - 1)])

    def apply(self, values, vec: np.ndarray) -> np.ndarray:
        a, bound = self._assemble(values)
        nsub = 1 if bound <= 1.0 else int(math.ceil(bound))
        if nsub > 1:
            a /= nsub
            bound /= nsub
        order = self._order(bound)
        out = vec.copy()
        term, tnew = self._term, self._tnew
        for _ in range(nsub):
            np.copyto(term, out)
            for k in range(1, order + 1):
                np.matmul(a, term, out=tnew)
                tnew *= 1.0 / k
                term, tnew = tnew, term
                out += term
        self._term, self._tnew = term, tnew
        return out


def propagate_forward(model: LindbladModel, fields, grid: TimeGrid,
                      parts: GeneratorParts | None = None) -> np.ndarray:
    """Propagate |chi>> from the identity process; returns (steps+1, N^4) trajectory."""
    values = _field_matrix(model, fields, grid)
    if parts is None:
        parts = GeneratorParts(model)
    stepper = StepPropagator(parts, grid.dt, sign=-1.0)
    v = initial_process(model.dim, model.basis).vec().astype(complex)
    traj = np.empty((grid.steps + 1, parts.size), dtype=complex)
    traj[0] = v
    for k in range(grid.steps):
        v = stepper.apply(values[:, k], v)
        traj[k + 1] = v
    return traj


def propagate_costate_backward(model: LindbladModel, fields, grid: TimeGrid,
                               boundary: np.ndarray,
                               parts: GeneratorParts | None = None) -> np.ndarray:
    """Integrate d|Lam>>/dt = -i K^dag |Lam>> from tf down to t0.

    Returns the (steps+1, N^4) costate trajectory; row k holds |Lam(t_k)>>.
    Each reverse step applies exp(+i K^dag dt), the exact adjoint of the
    forward step, so <<Lam(t)|chi(t)>> is conserved along paired sweeps.
    """
    if parts is None:
        parts = GeneratorParts(model)
    boundary = np.asarray(boundary, dtype=complex)
    if boundary.shape != (parts.size,):
        raise ValueError(f"boundary must have length {parts.size}")
    values = _field_matrix(model, fields, grid)
    stepper = StepPropagator(parts, grid.dt, sign=+1.0, dagger=True)
    traj = np.empty((grid.steps + 1, parts.size), dtype=complex)
    traj[grid.steps] = boundary
    v = boundary
    for k in range(grid.steps - 1, -1, -1):
        v = stepper.apply(values[:, k], v)
        traj[k] = v
    return traj


def trajectory_process(model: LindbladModel, traj: np.ndarray, k: int = -1) -> ProcessMatrix:
    """Wrap one trajectory row as a ProcessMatrix."""
    n2 = model.basis.size
    return ProcessMatrix(basis=model.basis, data=traj[k].reshape(n2, n2).copy())


def check_trajectory(model: LindbladModel, traj: np.ndarray,
                     trace_tol: float = 1e-8, eig_floor: float = -1e-7) -> None:
    """Structural invariants along a propagation: trace, positivity, purity bound."""
    n = model.dim
    n2 = n * n
    chis = traj.reshape(traj.shape[0], n2, n2)
    traces = np.einsum("kii->k", chis)
    drift = np.max(np.abs(traces - n))
    if drift > trace_tol:
        raise ValueError(f"trace drift {drift:.3e} exceeds {trace_tol:.1e}")
    pur2 = np.einsum("kij,kij->k", chis.conj(), chis).real
    if pur2.max() > n2 + 1e-8 * n2:
        raise ValueError(f"purity bound violated: max Tr[chi^2] = {pur2.max():.8f}")
    for k in range(chis.shape[0]):
        h = 0.5 * (chis[k] + chis[k].conj().T)
        emin = np.linalg.eigvalsh(h)[0]
        if emin < eig_floor:
            raise ValueError(f"chi(t_{k}) not PSD: min eigenvalue {emin:.3e}")


def _field_matrix(model: LindbladModel, fields, grid: TimeGrid) -> np.ndarray:
    """Stack field samples into an (n_controls, steps) array, with checks."""
    if len(fields) != model.n_controls:
        raise ValueError(f"model has {model.n_controls} controls, got {len(fields)} fields")
    rows = []
    for f in fields:
        v = f.values if isinstance(f, ControlField) else np.asarray(f, dtype=float)
        if v.shape != (grid.steps,):
            raise ValueError(f"field has {v.shape} samples, grid has {grid.steps} intervals")
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        rows.append(v)
    return np.array(rows)


# ---------------------------------------------------------------------------
# Density-matrix-level oracle (independent code path)
# ---------------------------------------------------------------------------

def _liouvillian(model: LindbladModel, values) -> np.ndarray:
    """Standard N^2 x N^2 Lindblad Liouvillian for vec(rho), row-major."""
    n = model.dim
    eye = np.eye(n)
    h = model.hamiltonian(values)
    liou = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in model.jumps:
        ldl = op.conj().T @ op
        liou += rate * (
            np.kron(op, op.conj())
            - 0.5 * np.kron(ldl, eye)
            - 0.5 * np.kron(eye, ldl.T)
        )
    return liou


def density_oracle(model: LindbladModel, fields, grid: TimeGrid,
                   rho0: np.ndarray) -> np.ndarray:
    """Propagate a density matrix with the plain Lindblad equation.

    Runs entirely at the N x N level (own vectorization, scipy exponentials)
    and is used as the independent oracle for the process-matrix propagation.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n = model.dim
    if rho0.shape != (n, n):
        raise ValueError(f"state must be {n}x{n}")
    if abs(np.trace(rho0) - 1.0) > 1e-9:
        raise ValueError("initial state must have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho0 + rho0.conj().T))[0] < -1e-10:
        raise ValueError("initial state must be positive semidefinite")
    values = _field_matrix(model, fields, grid)
    v = rho0.reshape(-1)
    for k in range(grid.steps):
        v = scipy.linalg.expm(_liouvillian(model, values[:, k]) * grid.dt) @ v
    return v.reshape(n, n)


def reconstruct_process_from_oracle(model: LindbladModel, fields,
                                    grid: TimeGrid) -> ProcessMatrix:
    """Brute-force chi(tf): evolve the full map at the density-matrix level.

    Accumulates the total N^2 x N^2 map superoperator from per-interval
    exponentials, reads off the Choi matrix entries
    chi_tilde[(i,j),(k,l)] = <i| E[|j><l|] |k>, and rotates the result from
    the logical basis into the model basis.
    """
    n = model.dim
    values = _field_matrix(model, fields, grid)
    total = np.eye(n * n, dtype=complex)
    for k in range(grid.steps):
        total = scipy.linalg.expm(_liouvillian(model, values[:, k]) * grid.dt) @ total
    # row-major vec: total[(i,k),(j,l)] = <i| E[|j><l|] |k>
    chi_log = total.reshape(n, n, n, n).transpose(0, 2, 1, 3).reshape(n * n, n * n)
    u = basis_change(model.basis, logical_basis(n))
    return ProcessMatrix(basis=model.basis, data=u.reverse(chi_log))
