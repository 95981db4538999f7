import numpy as np
import pytest
import scipy.linalg

from conftest import random_unitary, random_valid_chi
from procopt import (
    FunctionalSpec,
    ProcessMatrix,
    apply_process,
    chi_from_unitary,
    choi_state,
    f_c,
    f_geo,
    f_hs,
    f_nc,
    f_state,
    gradient,
    krotov_A,
    logical_basis,
    probe_states,
    value,
)
from procopt.functionals import evolved_probe_states, state_target_matrix
from procopt.lambda_system import TargetGate


def _spec(kind, gm3, **kw):
    rng = np.random.default_rng(77)
    if kind in ("fc", "fnc", "fhs", "fgeo"):
        return FunctionalSpec(kind=kind, target=random_valid_chi(rng, gm3), **kw)
    if kind == "fstate":
        return FunctionalSpec(kind=kind, target_unitary=TargetGate.qft().matrix, **kw)
    return FunctionalSpec(kind=kind, **kw)


# ---------------------------------------------------------------------------
# values
# ---------------------------------------------------------------------------

def test_fc_closed_forms(gm3):
    chi_i = chi_from_unitary(np.eye(3), gm3)
    chi_p = chi_from_unitary(TargetGate.phase().matrix, gm3)
    assert f_c(chi_p, chi_p) == pytest.approx(1.0, abs=1e-12)
    assert f_c(chi_i, chi_p) == pytest.approx(1.0 / 9.0, abs=1e-12)


def test_fnc_closed_forms(gm3):
    chi_i = chi_from_unitary(np.eye(3), gm3)
    chi_q = chi_from_unitary(TargetGate.qft().matrix, gm3)
    assert f_nc(chi_q, chi_q) == pytest.approx(1.0, abs=1e-12)
    assert f_nc(chi_i, chi_q) == pytest.approx(1.0 / 9.0, abs=1e-12)


def test_fnc_rejects_zero_norm(gm3):
    chi_i = chi_from_unitary(np.eye(3), gm3)
    zero = ProcessMatrix(basis=gm3, data=np.zeros((9, 9), dtype=complex))
    with pytest.raises(ValueError):
        f_nc(chi_i, zero)


def test_fhs_closed_forms(gm3):
    chi_i = chi_from_unitary(np.eye(3), gm3)
    chi_p = chi_from_unitary(TargetGate.phase().matrix, gm3)
    assert f_hs(chi_i, chi_i) == pytest.approx(1.0, abs=1e-12)
    assert f_hs(chi_i, chi_p) == pytest.approx(1.0 - 16.0 / 18.0, abs=1e-12)


def test_fgeo_identical_and_right_angle(gm3):
    chi_q = chi_from_unitary(TargetGate.qft().matrix, gm3)
    assert f_geo(chi_q, chi_q) == pytest.approx(1.0, abs=1e-12)
    # chi_I vs the pi phase gate: equal Bloch lengths, d12 = |Tr O|^2 - 1 = 0,
    # so the angle term alone contributes arccos(0)^2/pi^2 = 1/4
    chi_i = chi_from_unitary(np.eye(3), gm3)
    chi_p = chi_from_unitary(TargetGate.phase().matrix, gm3)
    assert f_geo(chi_i, chi_p, 0.5, 0.5) == pytest.approx(1.0 - 0.5 * 0.25, abs=1e-12)
    assert f_geo(chi_i, chi_p, 1.0, 0.0) == pytest.approx(0.75, abs=1e-12)


def test_fgeo_rejects_maximally_mixed():
    lg = logical_basis(3)
    mixed = ProcessMatrix(basis=lg, data=np.eye(9, dtype=complex) / 3.0)
    other = ProcessMatrix(basis=lg, data=np.diag([3.0] + [0.0] * 8).astype(complex))
    with pytest.raises(ValueError):
        f_geo(mixed, other)


def test_fidelity_symmetry_and_ranges(gm3):
    rng = np.random.default_rng(3)
    for k in range(1000):
        a, b = random_valid_chi(rng, gm3), random_valid_chi(rng, gm3)
        if k % 20 == 0:
            assert f_c(a, b) == pytest.approx(f_c(b, a), abs=1e-12)
            assert f_nc(a, b) == pytest.approx(f_nc(b, a), abs=1e-12)
            assert f_hs(a, b) == pytest.approx(f_hs(b, a), abs=1e-12)
            assert f_geo(a, b) == pytest.approx(f_geo(b, a), abs=1e-12)
        assert 0.0 <= f_c(a, b) <= 1.0 + 1e-12
        assert 1.0 / 9.0 - 1e-12 <= f_nc(a, b) <= 1.0 + 1e-12
        assert f_hs(a, b) <= 1.0 + 1e-12
        assert f_geo(a, b) <= 1.0 + 1e-12


def test_fidelities_invariant_under_basis_change(gm3):
    from procopt import basis_change, logical_basis

    rng = np.random.default_rng(41)
    lg = logical_basis(3)
    bc = basis_change(gm3, lg)
    for _ in range(5):
        a, b = random_valid_chi(rng, gm3), random_valid_chi(rng, gm3)
        a2 = ProcessMatrix(basis=lg, data=bc.apply(a.data))
        b2 = ProcessMatrix(basis=lg, data=bc.apply(b.data))
        for f in (f_c, f_nc, f_hs, f_geo):
            assert f(a, b) == pytest.approx(f(a2, b2), abs=1e-10)


def test_fhs_bloch_identity(gm3):
    from procopt import bloch_decompose

    rng = np.random.default_rng(43)
    for _ in range(10):
        a, b = random_valid_chi(rng, gm3), random_valid_chi(rng, gm3)
        r1, r2 = bloch_decompose(a).r, bloch_decompose(b).r
        want = 1.0 - np.sum((r1 - r2) ** 2) / 18.0
        assert f_hs(a, b) == pytest.approx(want, abs=1e-10)


def test_fc_equals_uhlmann_for_unitary_targets(gm3):
    rng = np.random.default_rng(5)
    for _ in range(5):
        chi = random_valid_chi(rng, gm3)
        chi_o = chi_from_unitary(random_unitary(rng), gm3)
        s = scipy.linalg.sqrtm(chi_o.data).astype(complex)
        inner = scipy.linalg.sqrtm(s @ chi.data @ s)
        uhl = np.trace(inner).real ** 2 / 9.0
        assert f_c(chi, chi_o) == pytest.approx(uhl, abs=1e-8)


def test_probe_states_definition():
    rho1, rho2, rho3 = probe_states(3)
    assert np.allclose(np.diag(rho1), [0.5, 1 / 3, 1 / 6])
    assert np.allclose(rho2, np.full((3, 3), 1 / 3))
    assert np.allclose(rho3, np.eye(3) / 3)
    for rho in (rho1, rho2, rho3):
        assert abs(np.trace(rho) - 1.0) < 1e-14


def test_fstate_exact_gate_is_one(gm3):
    o = TargetGate.qft().matrix
    finals = [o @ rho @ o.conj().T for rho in probe_states(3)]
    assert f_state(o, finals) == pytest.approx(1.0, abs=1e-12)


def test_fstate_detects_global_phase_equivalence(gm3):
    rng = np.random.default_rng(9)
    for _ in range(5):
        v = random_unitary(rng)
        chi_v = chi_from_unitary(v, gm3)
        finals = evolved_probe_states(chi_v)
        assert f_state(v * np.exp(0.3j), finals) == pytest.approx(1.0, abs=1e-10)
        w = random_unitary(rng)
        assert f_state(w, finals) < 1.0 - 1e-4


def test_fstate_linear_form_matches_probe_evolution(gm3):
    rng = np.random.default_rng(13)
    o = TargetGate.qft().matrix
    xi_s = state_target_matrix(o, gm3)
    assert np.max(np.abs(xi_s - xi_s.conj().T)) < 1e-12
    for _ in range(5):
        chi = random_valid_chi(rng, gm3)
        via_states = f_state(o, evolved_probe_states(chi))
        via_overlap = np.vdot(xi_s, chi.data).real
        assert via_states == pytest.approx(via_overlap, abs=1e-10)


def test_fstate_rejects_nonunitary():
    with pytest.raises(ValueError):
        f_state(np.ones((3, 3)), probe_states(3))


def test_value_dispatch(gm3):
    rng = np.random.default_rng(15)
    chi = random_valid_chi(rng, gm3)
    target = chi_from_unitary(TargetGate.qft().matrix, gm3)
    assert value(FunctionalSpec("fc", target=target), chi) == pytest.approx(
        f_c(chi, target), abs=1e-14
    )
    from procopt import coherence_l1, purity

    assert value(FunctionalSpec("purity"), chi) == pytest.approx(purity(chi), abs=1e-14)
    assert value(FunctionalSpec("coherence"), chi) == pytest.approx(
        coherence_l1(chi), abs=1e-14
    )


def test_spec_validation(gm3):
    with pytest.raises(ValueError):
        FunctionalSpec("bogus")
    with pytest.raises(ValueError):
        FunctionalSpec("fc")  # missing target
    with pytest.raises(ValueError):
        FunctionalSpec("fstate")  # missing unitary
    with pytest.raises(ValueError):
        _spec("fgeo", gm3, w_angle=0.7, w_length=0.7)
    assert _spec("fc", gm3).first_order
    assert _spec("fstate", gm3).first_order
    for kind in ("fnc", "fhs", "fgeo", "purity", "coherence"):
        assert not _spec(kind, gm3).first_order


# ---------------------------------------------------------------------------
# gradients: every kind obeys dF[V] = 2 Re <<V|Lam>>
# ---------------------------------------------------------------------------

def _directional_fd(spec, chi, direction, delta):
    up = ProcessMatrix(basis=chi.basis, data=chi.data + delta * direction)
    dn = ProcessMatrix(basis=chi.basis, data=chi.data - delta * direction)
    return (value(spec, up) - value(spec, dn)) / (2 * delta)


@pytest.mark.parametrize("kind", ["fc", "fnc", "fhs", "fgeo", "fstate", "purity", "coherence"])
def test_gradient_matches_finite_difference(kind, gm3):
    rng = np.random.default_rng(abs(hash(kind)) % 2**32)
    spec = _spec(kind, gm3)
    for _ in range(5):
        chi = random_valid_chi(rng, gm3)
        lam = gradient(spec, chi).reshape(9, 9)
        for _ in range(2):
            v = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
            v = 0.5 * (v + v.conj().T)
            analytic = 2.0 * np.vdot(v, lam).real
            best = min(
                abs(_directional_fd(spec, chi, v, d) - analytic)
                for d in (1e-5, 1e-6, 1e-7)
            )
            assert best <= 1e-5 * max(1.0, abs(analytic))


def test_gradient_fc_is_constant(gm3):
    spec = _spec("fc", gm3)
    rng = np.random.default_rng(1)
    g1 = gradient(spec, random_valid_chi(rng, gm3))
    g2 = gradient(spec, random_valid_chi(rng, gm3))
    assert np.array_equal(g1, g2)
    assert np.max(np.abs(g1.reshape(9, 9) - spec.target.data / 18.0)) < 1e-15


def test_gradient_purity_direction(gm3):
    rng = np.random.default_rng(2)
    chi = random_valid_chi(rng, gm3)
    lam = gradient(FunctionalSpec("purity"), chi).reshape(9, 9)
    assert np.max(np.abs(lam - chi.data / 9.0)) < 1e-14


def test_gradient_coherence_is_hermitian_matrix(gm3):
    rng = np.random.default_rng(4)
    chi = random_valid_chi(rng, gm3)
    lam = gradient(FunctionalSpec("coherence"), chi).reshape(9, 9)
    assert np.max(np.abs(lam - lam.conj().T)) < 1e-12


# ---------------------------------------------------------------------------
# second-order parameters
# ---------------------------------------------------------------------------

def test_krotov_a_first_order_shortcut(gm3):
    spec = _spec("fc", gm3)
    a, sigma = krotov_A(spec, np.ones(81), np.ones(81), -0.3)
    assert a == 0.0 and sigma == 0.0


def test_krotov_a_converged_step(gm3):
    spec = _spec("fhs", gm3)
    a, sigma = krotov_A(spec, np.zeros(81), np.ones(81), 0.0)
    assert a == 0.0 and sigma == 0.0


def test_krotov_a_cancelling_numerator(gm3):
    rng = np.random.default_rng(6)
    spec = _spec("fhs", gm3)
    dchi = rng.normal(size=81) + 1j * rng.normal(size=81)
    lam = rng.normal(size=81) + 1j * rng.normal(size=81)
    df = -2.0 * np.vdot(dchi, lam).real
    a, sigma = krotov_A(spec, dchi, lam, df, zeta_a=0.01)
    assert a == pytest.approx(0.0, abs=1e-12)
    assert sigma == pytest.approx(-0.01, abs=1e-12)


def test_krotov_a_hilbert_schmidt_closed_form(gm3):
    # quadratic functional: A from real iteration data equals 1/(2 N^2)
    rng = np.random.default_rng(7)
    spec = _spec("fhs", gm3)
    chi_old = random_valid_chi(rng, gm3)
    chi_new = random_valid_chi(rng, gm3)
    lam = gradient(spec, chi_old)
    df_min = (-value(spec, chi_new)) - (-value(spec, chi_old))
    dchi = (chi_new.data - chi_old.data).reshape(-1)
    a, sigma = krotov_A(spec, dchi, lam, df_min, zeta_a=0.01)
    assert a == pytest.approx(1.0 / 18.0, abs=1e-12)
    assert sigma == pytest.approx(-(2.0 / 18.0 + 0.01), abs=1e-12)


def test_krotov_a_purity_closed_form(gm3):
    # -purity is concave quadratic with curvature -1/N^2, so Abar = zeta_a
    rng = np.random.default_rng(8)
    spec = FunctionalSpec("purity")
    chi_old = random_valid_chi(rng, gm3)
    chi_new = random_valid_chi(rng, gm3)
    lam = gradient(spec, chi_old)
    df_min = (-value(spec, chi_new)) - (-value(spec, chi_old))
    dchi = (chi_new.data - chi_old.data).reshape(-1)
    a, sigma = krotov_A(spec, dchi, lam, df_min, zeta_a=0.01)
    assert a == pytest.approx(-1.0 / 9.0, abs=1e-12)
    assert sigma == pytest.approx(-0.01, abs=1e-12)


def test_choi_state_psd_on_valid(gm3):
    rng = np.random.default_rng(11)
    for _ in range(5):
        chi = random_valid_chi(rng, gm3)
        assert np.linalg.eigvalsh(choi_state(chi))[0] > -1e-8


def test_coherence_example_values_via_apply(gm3):
    # sanity tie: evolved probes under a unitary chi match direct conjugation
    rng = np.random.default_rng(19)
    u = random_unitary(rng)
    chi = chi_from_unitary(u, gm3)
    for rho, got in zip(probe_states(3), evolved_probe_states(chi)):
        assert np.max(np.abs(got - u @ rho @ u.conj().T)) < 1e-12
