"""The driven Lambda-configuration qutrit and its control workflow pieces.

Two ground states |1>, |3> couple to a decaying excited state |2> through
pump and Stokes fields.  Frequencies and rates are stored in rad/us and
1/us respectively with hbar = 1; MHz-valued model parameters are taken at
face value on this scale (no 2*pi insertion), so a 0.1 detuning accumulates
a dimensionless phase of 2 over a 20 us pulse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import OperatorBasis, gell_mann_basis
from .dynamics import ControlField, LindbladModel, TimeGrid
from .process import ProcessMatrix, chi_from_unitary

GUESS_FAMILIES = ("blackman", "gaussian", "sinusoid")
ROLES = ("pump", "stokes")


@dataclass(frozen=True)
class LambdaParams:
    """Detunings, decay rates, guess amplitudes, and Blackman shape constants."""

    delta_p: float = 0.1  # rad/us
    delta_s: float = 0.1
    gamma_1: float = 0.1  # 1/us, decay |2> -> |1>
    gamma_3: float = 0.1  # 1/us, decay |2> -> |3>
    e0_p: float = 0.3  # pump guess amplitude, rad/us
    e0_s: float = 1.0  # Stokes guess amplitude, rad/us
    g: float = 0.16
    k_p: int = 4
    l_p: int = 8
    k_s: int = 2
    l_s: int = 4

    def __post_init__(self):
        if self.gamma_1 < 0 or self.gamma_3 < 0:
            raise ValueError("decay rates must be nonnegative")


PRESETS = {"lambda-rb87-default": LambdaParams()}


@dataclass(frozen=True)
class TargetGate:
    """A qutrit target gate: phase gate or quantum Fourier transform."""

    kind: str
    matrix: np.ndarray

    def __post_init__(self):
        if np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(3))) > 1e-12:
            raise ValueError("target gate must be unitary")
        self.matrix.setflags(write=False)

    @classmethod
    def phase(cls, phi: float = np.pi) -> "TargetGate":
        return cls(kind="phase", matrix=np.diag([1.0, 1.0, np.exp(1j * phi)]).astype(complex))

    @classmethod
    def qft(cls, q: complex = None) -> "TargetGate":
        if q is None:
            q = np.exp(2j * np.pi / 3)
        m = np.array([[1, 1, 1], [1, q, q * q], [1, q * q, q]], dtype=complex) / np.sqrt(3)
        return cls(kind="qft", matrix=m)


def lambda_model(params: LambdaParams | None = None,
                 basis: OperatorBasis | None = None) -> LindbladModel:
    """Lindblad model of the driven Lambda system.

    Drift diag(-delta_p, 0, -delta_s); pump couples |1><2|, Stokes |2><3|,
    both with the -1/2 convention so the field values are the Rabi
    frequencies themselves; |2> decays to |1> and |3>.
    """
    if params is None:
        params = LambdaParams()
    if basis is None:
        basis = gell_mann_basis(3)
    drift = np.diag([-params.delta_p, 0.0, -params.delta_s]).astype(complex)
    h_p = np.zeros((3, 3), dtype=complex)
    h_p[0, 1] = h_p[1, 0] = -0.5
    h_s = np.zeros((3, 3), dtype=complex)
    h_s[1, 2] = h_s[2, 1] = -0.5
    l_21 = np.zeros((3, 3), dtype=complex)
    l_21[0, 1] = 1.0  # |1><2|
    l_23 = np.zeros((3, 3), dtype=complex)
    l_23[2, 1] = 1.0  # |3><2|
    return LindbladModel(
        dim=3,
        basis=basis,
        drift=drift,
        controls=((h_p, "pump"), (h_s, "stokes")),
        jumps=((l_21, params.gamma_1), (l_23, params.gamma_3)),
    )


def _family_profile(family: str, role: str, params: LambdaParams,
                    t: np.ndarray, tf: float) -> np.ndarray:
    if family == "blackman":
        k = params.k_p if role == "pump" else params.k_s
        l = params.l_p if role == "pump" else params.l_s
        return (1.0 - params.g - np.cos(k * np.pi * t / tf)
                + params.g * np.cos(l * np.pi * t / tf)) / 2.0
    if family == "gaussian":
        return np.exp(-32.0 * (t / tf - 0.5) ** 2)
    if family == "sinusoid":
        return np.sin(2.0 * np.pi * t / tf) ** 2
    raise ValueError(f"unknown guess family {family!r}")


def guess_field(family: str, role: str, params: LambdaParams,
                grid: TimeGrid, weight: float = 1.0) -> ControlField:
    """Initial guess field of the given family, sampled at interval midpoints.

    The returned field carries its own profile as the Krotov update shape,
    with the first and last samples pinned to zero so the endpoint values
    never move during optimization.
    """
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}")
    amplitude = params.e0_p if role == "pump" else params.e0_s
    t = grid.midpoints() - grid.t0
    profile = _family_profile(family, role, params, t, grid.tf - grid.t0)
    # the Blackman family touches zero with ~1e-17 floating-point residue
    shape = np.maximum(profile, 0.0)
    shape[0] = 0.0
    shape[-1] = 0.0
    return ControlField(label=role, values=amplitude * profile, shape=shape, weight=weight)


def target_process(gate: TargetGate, basis: OperatorBasis) -> ProcessMatrix:
    """Process matrix Xi of the target unitary gate."""
    return chi_from_unitary(gate.matrix, basis)


def rescale_field(fld: ControlField, from_tf: float, to_tf: float,
                  to_grid: TimeGrid) -> ControlField:
    """Stretch a field's time axis: eps'(t) = eps(t * from_tf / to_tf).

    Amplitudes are unchanged; samples are linearly interpolated from the
    source midpoints onto the destination grid.  The update shape is
    stretched the same way (endpoint pinning survives the stretch).
    """
    if from_tf <= 0 or to_tf <= 0:
        raise ValueError("final times must be positive")
    if fld.values.size == 0:
        raise ValueError("cannot rescale an empty field")
    n_src = fld.values.size
    src_t = (np.arange(n_src) + 0.5) * (from_tf / n_src)
    dst_t = (to_grid.midpoints() - to_grid.t0) * (from_tf / to_tf)
    values = np.interp(dst_t, src_t, fld.values)
    shape = None
    if fld.shape is not None:
        shape = np.interp(dst_t, src_t, fld.shape)
        shape[0] = 0.0 if fld.shape[0] == 0.0 else shape[0]
        shape[-1] = 0.0 if fld.shape[-1] == 0.0 else shape[-1]
    return ControlField(label=fld.label, values=values, shape=shape, weight=fld.weight)
