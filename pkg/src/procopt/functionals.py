"""Final-time objectives: process fidelities, state fidelity, purity, coherence.

Each functional F is the natural "larger is better" figure of merit; the
optimizer minimizes -F plus the field cost.  `gradient` returns the costate
boundary |Lam(tf)>> = -d(-F)/d<<chi| in the symmetrized Wirtinger convention,
under which every kind satisfies the same directional-derivative identity

    d/dd F(chi + d V) = 2 Re <<V | Lam>>            (V Hermitian),

and the curvature parameter of the second-order Krotov step comes out with
its known closed forms: A = 0 for the linear functionals (convex overlap,
state-based) and A = 1/(2 N^2) for the Hilbert-Schmidt fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import OperatorBasis, basis_change, logical_basis
from .process import ProcessMatrix, apply_process, choi_state, purity

KINDS = ("fc", "fnc", "fhs", "fgeo", "fstate", "purity", "coherence")
FIRST_ORDER_KINDS = ("fc", "fstate")  # F linear in chi => A = 0 exactly


@dataclass(frozen=True)
class FunctionalSpec:
    """A final-time objective with its parameters.

    kind: one of "fc", "fnc", "fhs", "fgeo", "fstate", "purity", "coherence".
    target: target process Xi (required for fc/fnc/fhs/fgeo).
    target_unitary: target gate O (required for fstate).
    w_angle / w_length: geometric-functional weights, w_angle + w_length = 1.
    probe_weights: state-fidelity probe weights, must sum to 1.
    smoothing: |z| -> sqrt(|z|^2 + eps^2) regularization for the coherence
        gradient only; reported coherence values stay exact.
    """

    kind: str
    target: ProcessMatrix | None = None
    target_unitary: np.ndarray | None = None
    w_angle: float = 0.5
    w_length: float = 0.5
    probe_weights: tuple = (1 / 3, 1 / 3, 1 / 3)
    smoothing: float = 1e-8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind in ("fc", "fnc", "fhs", "fgeo") and self.target is None:
            raise ValueError(f"functional {self.kind!r} needs a target process")
        if self.kind == "fstate":
            if self.target_unitary is None:
                raise ValueError("fstate needs a target unitary")
            if abs(sum(self.probe_weights) - 1.0) > 1e-12:
                raise ValueError("probe weights must sum to 1")
        if self.kind == "fgeo":
            if not (0 <= self.w_angle <= 1 and 0 <= self.w_length <= 1):
                raise ValueError("geometric weights must lie in [0, 1]")
            if abs(self.w_angle + self.w_length - 1.0) > 1e-12:
                raise ValueError("geometric weights must sum to 1")

    @property
    def first_order(self) -> bool:
        """True when -F is linear in chi, so the sigma term vanishes."""
        return self.kind in FIRST_ORDER_KINDS


def _check_pair(chi1: ProcessMatrix, chi2: ProcessMatrix) -> None:
    if chi1.basis.size != chi2.basis.size or chi1.dim != chi2.dim:
        raise ValueError("process matrices live in different spaces")
    if chi1.basis.kind is not chi2.basis.kind:
        raise ValueError("process matrices use different bases")


def _real_overlap(a: np.ndarray, b: np.ndarray) -> float:
    ov = np.vdot(a, b)
    if abs(ov.imag) > 1e-12 * max(1.0, abs(ov.real)):
        raise ValueError(f"overlap has a large imaginary part ({ov.imag:.3e})")
    return ov.real


def f_c(chi1: ProcessMatrix, chi2: ProcessMatrix) -> float:
    """Convex overlap fidelity <<chi1|chi2>> / N^2."""
    _check_pair(chi1, chi2)
    return _real_overlap(chi1.data, chi2.data) / chi1.dim**2


def f_nc(chi1: ProcessMatrix, chi2: ProcessMatrix) -> float:
    """Normalized (nonconvex) overlap; ranges over [1/N^2, 1] for valid processes."""
    _check_pair(chi1, chi2)
    p = np.vdot(chi1.data, chi1.data).real
    q = np.vdot(chi2.data, chi2.data).real
    if p <= 0 or q <= 0:
        raise ValueError("nonconvex overlap needs nonzero-norm arguments")
    return _real_overlap(chi1.data, chi2.data) / np.sqrt(p * q)


def f_hs(chi1: ProcessMatrix, chi2: ProcessMatrix) -> float:
    """Normalized Hilbert-Schmidt fidelity 1 - ||chi1 - chi2||^2 / (2 N^2)."""
    _check_pair(chi1, chi2)
    d = chi1.data - chi2.data
    return 1.0 - np.vdot(d, d).real / (2.0 * chi1.dim**2)


def _geo_invariants(chi1: ProcessMatrix, chi2: ProcessMatrix):
    d11 = np.vdot(chi1.data, chi1.data).real - 1.0
    d22 = np.vdot(chi2.data, chi2.data).real - 1.0
    d12 = _real_overlap(chi1.data, chi2.data) - 1.0
    if d11 <= 0 or d22 <= 0:
        raise ValueError("geometric fidelity is undefined at the maximally mixed process")
    return d11, d22, d12


def f_geo(chi1: ProcessMatrix, chi2: ProcessMatrix,
          w_angle: float = 0.5, w_length: float = 0.5) -> float:
    """Geometric fidelity splitting Bloch-vector angle and length mismatch."""
    d11, d22, d12 = _geo_invariants(chi1, chi2)
    n2 = chi1.dim**2
    d_len = (np.sqrt(d11) - np.sqrt(d22)) ** 2 / (n2 - 1.0)
    cosang = np.clip(d12 / np.sqrt(d11 * d22), -1.0, 1.0)
    d_ang = np.arccos(cosang) ** 2 / np.pi**2
    return 1.0 - w_angle * d_ang - w_length * d_len


def probe_states(dim: int) -> list[np.ndarray]:
    """The three probe states that certify a unitary on the full space."""
    rho1 = np.diag([2.0 * (dim - i) for i in range(dim)]).astype(complex)
    rho1 /= dim * (dim + 1.0)
    rho2 = np.full((dim, dim), 1.0 / dim, dtype=complex)
    rho3 = np.eye(dim, dtype=complex) / dim
    return [rho1, rho2, rho3]


def f_state(gate: np.ndarray, final_states, weights=None) -> float:
    """State-averaged gate fidelity from evolved probe states.

    sum_k (w_k / Tr[rho_k(t0)^2]) Tr[O rho_k(t0) O^dag rho_k(tf)], with the
    probes of :func:`probe_states`; equals 1 when the map is exactly
    rho -> O rho O^dag.
    """
    gate = np.asarray(gate, dtype=complex)
    dim = gate.shape[0]
    if np.max(np.abs(gate.conj().T @ gate - np.eye(dim))) > 1e-10:
        raise ValueError("state fidelity target must be unitary")
    probes = probe_states(dim)
    if weights is None:
        weights = [1.0 / len(probes)] * len(probes)
    total = 0.0
    for w, rho0, rho_f in zip(weights, probes, final_states):
        ideal = gate @ rho0 @ gate.conj().T
        total += w / np.trace(rho0 @ rho0).real * np.trace(ideal @ rho_f).real
    return float(total)


def state_target_matrix(gate: np.ndarray, basis: OperatorBasis,
                        weights=(1 / 3, 1 / 3, 1 / 3)) -> np.ndarray:
    """Hermitian matrix Xi_S with F_state(chi) = <<Xi_S | chi>>.

    Expanding each evolved probe through the Kraus form makes the state
    fidelity a linear functional of chi; this builds its coefficient matrix
    once so optimization shares the plain overlap machinery.
    """
    gate = np.asarray(gate, dtype=complex)
    b = basis.elements
    n2 = basis.size
    w_mat = np.zeros((n2, n2), dtype=complex)
    for w, rho0 in zip(weights, probe_states(basis.dim)):
        ideal = gate @ rho0 @ gate.conj().T
        coeff = w / np.trace(rho0 @ rho0).real
        # W_lm = c * Tr[C_m^dag A C_l rho]; F = sum_lm W_lm chi_lm = <<W^* | chi>>
        w_mat += coeff * np.einsum("mcd,ca,lab,bd->lm", b.conj(), ideal, b, rho0)
    return w_mat.conj()


def value(spec: FunctionalSpec, chi: ProcessMatrix) -> float:
    """Evaluate the natural (maximized) functional value at chi."""
    if spec.kind == "fc":
        return f_c(chi, spec.target)
    if spec.kind == "fnc":
        return f_nc(chi, spec.target)
    if spec.kind == "fhs":
        return f_hs(chi, spec.target)
    if spec.kind == "fgeo":
        return f_geo(chi, spec.target, spec.w_angle, spec.w_length)
    if spec.kind == "fstate":
        xi_s = state_target_matrix(spec.target_unitary, chi.basis, spec.probe_weights)
        return _real_overlap(xi_s, chi.data)
    if spec.kind == "purity":
        return purity(chi)
    if spec.kind == "coherence":
        from .process import coherence_l1

        return coherence_l1(chi)
    raise ValueError(spec.kind)


def gradient(spec: FunctionalSpec, chi: ProcessMatrix) -> np.ndarray:
    """Costate boundary |Lam(tf)>> = dF/d<<chi| for the minimized -F problem.

    Satisfies dF[V] = 2 Re <<V|Lam>> along Hermitian directions V for every
    kind (checked against central finite differences in the test suite).
    """
    n2 = chi.dim**2
    x = chi.data
    if spec.kind == "fc":
        return spec.target.data.reshape(-1) / (2.0 * n2)
    if spec.kind == "fnc":
        xi = spec.target.data
        p = np.vdot(x, x).real
        q = np.vdot(xi, xi).real
        s = np.vdot(x, xi).real
        lam = (xi - (s / p) * x) / (2.0 * np.sqrt(p * q))
        return lam.reshape(-1)
    if spec.kind == "fhs":
        return (spec.target.data - x).reshape(-1) / (2.0 * n2)
    if spec.kind == "fgeo":
        xi = spec.target.data
        d11 = np.vdot(x, x).real - 1.0
        d22 = np.vdot(xi, xi).real - 1.0
        d12 = np.vdot(x, xi).real - 1.0
        if d11 <= 0 or d22 <= 0:
            raise ValueError("geometric gradient undefined at the maximally mixed process")
        g_len = (np.sqrt(d11) - np.sqrt(d22)) / (np.sqrt(d11) * (n2 - 1.0)) * x
        c = d12 / np.sqrt(d11 * d22)
        if abs(c) >= 1.0:
            # clamped arccos: one-sided limit, angle term contributes nothing
            g_ang = np.zeros_like(x)
        else:
            pref = -2.0 * np.arccos(c) / (np.pi**2 * np.sqrt(1.0 - c * c))
            dc = (xi / 2.0) / np.sqrt(d11 * d22) - (c / (2.0 * d11)) * x
            g_ang = pref * dc
        return -(spec.w_angle * g_ang + spec.w_length * g_len).reshape(-1)
    if spec.kind == "fstate":
        xi_s = state_target_matrix(spec.target_unitary, chi.basis, spec.probe_weights)
        return xi_s.reshape(-1) / 2.0
    if spec.kind == "purity":
        return x.reshape(-1) / n2
    if spec.kind == "coherence":
        n = chi.dim
        u = basis_change(chi.basis, logical_basis(n)).matrix
        rho = (u.conj().T @ x @ u) / n
        mod = np.sqrt(np.abs(rho) ** 2 + spec.smoothing**2)
        g = rho / mod
        np.fill_diagonal(g, 0.0)
        lam = (u @ g @ u.conj().T) / (2.0 * n * (n2 - 1.0))
        return lam.reshape(-1)
    raise ValueError(spec.kind)


def smoothed_coherence(spec: FunctionalSpec, chi: ProcessMatrix) -> float:
    """Coherence with the gradient's |z| regularization (for derivative checks)."""
    n = chi.dim
    rho = choi_state(chi)
    mod = np.sqrt(np.abs(rho) ** 2 + spec.smoothing**2)
    return float(mod.sum() - np.trace(mod).real) / (n * n - 1)


def krotov_A(spec: FunctionalSpec, dchi_f: np.ndarray, lam_f: np.ndarray,
             delta_f_min: float, zeta_a: float = 0.01) -> tuple[float, float]:
    """Second-order Krotov parameters from final-time iteration data.

    A = (dF + 2 Re <<dchi|Lam>>) / <<dchi|dchi>> with dF the change of the
    minimized functional; sigma = -max(zeta_a, 2A + zeta_a).  First-order
    specs short-circuit to (0, 0); so does a vanishing step (no curvature
    information once converged).
    """
    if spec.first_order:
        return 0.0, 0.0
    dchi_f = np.asarray(dchi_f).reshape(-1)
    norm2 = np.vdot(dchi_f, dchi_f).real
    if norm2 < 1e-28:
        return 0.0, 0.0
    a = (delta_f_min + 2.0 * np.real(np.vdot(dchi_f, np.asarray(lam_f).reshape(-1)))) / norm2
    return float(a), -max(zeta_a, 2.0 * a + zeta_a)


def evolved_probe_states(chi: ProcessMatrix) -> list[np.ndarray]:
    """Push the three probe states through the channel described by chi."""
    return [apply_process(chi, rho) for rho in probe_states(chi.dim)]
