import numpy as np
import pytest

from conftest import random_unitary
from procopt import (
    ControlField,
    LindbladModel,
    TimeGrid,
    build_generator,
    chi_from_unitary,
    check_trajectory,
    control_generator_derivative,
    density_oracle,
    gell_mann_basis,
    initial_process,
    lambda_model,
    propagate_costate_backward,
    propagate_forward,
    reconstruct_process_from_oracle,
    trajectory_process,
)
from procopt.dynamics import GeneratorParts, StepPropagator
from procopt.lambda_system import LambdaParams, guess_field


def _const_fields(model, grid, values):
    return [ControlField(label, np.full(grid.steps, v))
            for v, (_, label) in zip(values, model.controls)]


def _free_model(gm3, drift=None, gammas=(0.0, 0.0)):
    params = LambdaParams(gamma_1=gammas[0], gamma_3=gammas[1])
    m = lambda_model(params, gm3)
    if drift is not None:
        m = LindbladModel(dim=3, basis=gm3, drift=drift,
                          controls=m.controls, jumps=m.jumps)
    return m


def test_grid_basics():
    g = TimeGrid(0.0, 20.0, 4)
    assert g.dt == 5.0
    assert np.allclose(g.points(), [0, 5, 10, 15, 20])
    assert np.allclose(g.midpoints(), [2.5, 7.5, 12.5, 17.5])
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 5)


def test_zero_generator_is_fixed_point(gm3):
    m = _free_model(gm3, drift=np.zeros((3, 3), dtype=complex))
    gen = build_generator(m, [0.0, 0.0])
    assert np.max(np.abs(gen.matrix)) == 0.0
    g = TimeGrid(0.0, 1.0, 10)
    traj = propagate_forward(m, _const_fields(m, g, [0.0, 0.0]), g)
    chi0 = initial_process(3, gm3).vec()
    assert np.max(np.abs(traj - chi0)) < 1e-15


def test_unitary_generator_is_hermitian_and_preserves_purity(gm3):
    m = _free_model(gm3)  # gamma = 0
    gen = build_generator(m, [0.4, -0.2]).matrix
    assert np.max(np.abs(gen - gen.conj().T)) < 1e-12
    g = TimeGrid(0.0, 10.0, 200)
    traj = propagate_forward(m, _const_fields(m, g, [0.4, -0.2]), g)
    pur2 = np.einsum("ki,ki->k", traj.conj(), traj).real
    assert np.max(np.abs(pur2 - 9.0)) < 1e-9


def test_generator_is_affine_in_fields(gm3):
    m = lambda_model(LambdaParams(), gm3)
    base = build_generator(m, [0.3, 1.1]).matrix
    for idx, delta in ((0, 0.37), (1, -0.6)):
        vals = [0.3, 1.1]
        vals[idx] += delta
        shifted = build_generator(m, vals).matrix
        deriv = control_generator_derivative(m, idx).matrix
        assert np.max(np.abs(shifted - base - delta * deriv)) < 1e-12


def test_control_derivative_finite_difference(gm3):
    m = lambda_model(LambdaParams(), gm3)
    eps = 1e-6
    up = build_generator(m, [0.3 + eps, 1.0]).matrix
    dn = build_generator(m, [0.3 - eps, 1.0]).matrix
    fd = (up - dn) / (2 * eps)
    assert np.max(np.abs(fd - control_generator_derivative(m, 0).matrix)) < 1e-8


def test_control_derivative_zero_hamiltonian(gm3):
    m = lambda_model(LambdaParams(), gm3)
    m0 = LindbladModel(dim=3, basis=gm3, drift=m.drift,
                       controls=((np.zeros((3, 3), dtype=complex), "null"),),
                       jumps=m.jumps)
    assert np.max(np.abs(control_generator_derivative(m0, 0).matrix)) == 0.0
    with pytest.raises(ValueError):
        control_generator_derivative(m, 5)


def test_field_count_mismatch(gm3):
    m = lambda_model(LambdaParams(), gm3)
    with pytest.raises(ValueError):
        build_generator(m, [1.0])
    g = TimeGrid(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        propagate_forward(m, _const_fields(m, g, [0.0, 0.0])[:1], g)


def test_nonfinite_fields_rejected(gm3):
    with pytest.raises(ValueError):
        ControlField("pump", np.array([0.0, np.nan]))


def test_stepper_matches_scipy_expm(gm3):
    import scipy.linalg

    m = lambda_model(LambdaParams(), gm3)
    parts = GeneratorParts(m)
    dt = 0.31
    stepper = StepPropagator(parts, dt, sign=-1.0)
    k = parts.k0 + 0.8 * parts.k_control[0] - 0.4 * parts.k_control[1]
    rng = np.random.default_rng(2)
    v = rng.normal(size=81) + 1j * rng.normal(size=81)
    want = scipy.linalg.expm(-1j * dt * k) @ v
    got = stepper.apply([0.8, -0.4], v)
    assert np.max(np.abs(got - want)) < 1e-12 * np.max(np.abs(want))


def test_trace_preservation_long_run(gm3):
    params = LambdaParams()
    m = lambda_model(params, gm3)
    g = TimeGrid(0.0, 20.0, 2000)
    fields = [guess_field("blackman", r, params, g) for r in ("pump", "stokes")]
    traj = propagate_forward(m, fields, g)
    traces = np.einsum("kii->k", traj.reshape(-1, 9, 9))
    assert np.max(np.abs(traces - 3.0)) < 1e-8
    check_trajectory(m, traj)


def test_check_trajectory_catches_corruption(gm3):
    m = lambda_model(LambdaParams(), gm3)
    g = TimeGrid(0.0, 1.0, 5)
    traj = propagate_forward(m, _const_fields(m, g, [0.1, 0.1]), g).copy()
    traj[-1] *= 1.1
    with pytest.raises(ValueError):
        check_trajectory(m, traj)


def test_costate_pairing_conserved(gm3):
    # gamma = 0 and boundary = |chi(tf)>>: <<Lam(t)|chi(t)>> constant
    m = _free_model(gm3)
    g = TimeGrid(0.0, 8.0, 160)
    fields = [guess_field("blackman", r, LambdaParams(), g) for r in ("pump", "stokes")]
    fwd = propagate_forward(m, fields, g)
    bwd = propagate_costate_backward(m, fields, g, fwd[-1])
    pair = np.einsum("ki,ki->k", bwd.conj(), fwd)
    assert np.max(np.abs(pair - pair[-1])) < 1e-10 * abs(pair[-1])


def test_costate_pairing_conserved_dissipative(gm3):
    # the discrete backward step is the exact adjoint of the forward step,
    # so the pairing is conserved for any generator
    m = lambda_model(LambdaParams(), gm3)
    g = TimeGrid(0.0, 8.0, 160)
    fields = [guess_field("gaussian", r, LambdaParams(), g) for r in ("pump", "stokes")]
    fwd = propagate_forward(m, fields, g)
    rng = np.random.default_rng(23)
    boundary = rng.normal(size=81) + 1j * rng.normal(size=81)
    bwd = propagate_costate_backward(m, fields, g, boundary)
    pair = np.einsum("ki,ki->k", bwd.conj(), fwd)
    assert np.max(np.abs(pair - pair[-1])) < 1e-10 * max(1.0, abs(pair[-1]))


def test_costate_zero_generator_constant(gm3):
    m = _free_model(gm3, drift=np.zeros((3, 3), dtype=complex))
    g = TimeGrid(0.0, 1.0, 10)
    boundary = np.arange(81).astype(complex)
    bwd = propagate_costate_backward(m, _const_fields(m, g, [0.0, 0.0]), g, boundary)
    assert np.max(np.abs(bwd - boundary)) < 1e-15


def test_costate_step_inversion(gm3):
    # stepping the costate backward and then forward in time is the identity
    m = lambda_model(LambdaParams(0.07, 0.2, 0.15, 0.05), gm3)
    parts = GeneratorParts(m)
    back = StepPropagator(parts, 0.05, sign=+1.0, dagger=True)
    fwd = StepPropagator(parts, 0.05, sign=-1.0, dagger=True)
    rng = np.random.default_rng(14)
    lam = rng.normal(size=81) + 1j * rng.normal(size=81)
    restored = fwd.apply([0.3, 0.9], back.apply([0.3, 0.9], lam))
    assert np.max(np.abs(restored - lam)) < 1e-10


def test_costate_boundary_length_checked(gm3):
    m = lambda_model(LambdaParams(), gm3)
    g = TimeGrid(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        propagate_costate_backward(m, _const_fields(m, g, [0.0, 0.0]), g, np.zeros(9))


def test_density_oracle_unitary_case(gm3):
    m = _free_model(gm3)
    g = TimeGrid(0.0, 5.0, 400)
    vals = [0.7, 0.3]
    rho0 = np.diag([0.5, 0.3, 0.2]).astype(complex)
    got = density_oracle(m, _const_fields(m, g, vals), g, rho0)
    import scipy.linalg

    u = scipy.linalg.expm(-1j * m.hamiltonian(vals) * 5.0)
    assert np.max(np.abs(got - u @ rho0 @ u.conj().T)) < 1e-9


def test_density_oracle_pure_decay(gm3):
    params = LambdaParams(delta_p=0.0, delta_s=0.0, gamma_1=0.13, gamma_3=0.27)
    m = lambda_model(params, gm3)
    g = TimeGrid(0.0, 4.0, 200)
    rho0 = np.diag([0.0, 1.0, 0.0]).astype(complex)
    rho = density_oracle(m, _const_fields(m, g, [0.0, 0.0]), g, rho0)
    assert rho[1, 1].real == pytest.approx(np.exp(-0.4 * 4.0), abs=1e-10)
    # populations flow to |1> and |3> in proportion to the rates
    assert rho[0, 0].real == pytest.approx(0.13 / 0.4 * (1 - np.exp(-1.6)), abs=1e-10)


def test_density_oracle_validates_state(gm3):
    m = lambda_model(LambdaParams(), gm3)
    g = TimeGrid(0.0, 1.0, 4)
    fields = _const_fields(m, g, [0.0, 0.0])
    with pytest.raises(ValueError):
        density_oracle(m, fields, g, np.eye(3, dtype=complex))  # trace 3
    with pytest.raises(ValueError):
        density_oracle(m, fields, g, np.diag([1.5, -0.5, 0.0]).astype(complex))


def test_reconstruct_identity_evolution(gm3):
    m = _free_model(gm3, drift=np.zeros((3, 3), dtype=complex))
    g = TimeGrid(0.0, 1.0, 5)
    chi = reconstruct_process_from_oracle(m, _const_fields(m, g, [0.0, 0.0]), g)
    assert np.max(np.abs(chi.data - initial_process(3, gm3).data)) < 1e-12


def test_reconstruct_unitary_rank_one(gm3):
    m = _free_model(gm3)
    g = TimeGrid(0.0, 6.0, 300)
    fields = [guess_field("sinusoid", r, LambdaParams(), g) for r in ("pump", "stokes")]
    chi = reconstruct_process_from_oracle(m, fields, g)
    assert abs(np.vdot(chi.data, chi.data).real - 9.0) < 1e-6
    evals = np.linalg.eigvalsh(chi.data)
    assert evals[-1] == pytest.approx(3.0, abs=1e-6)
    assert np.max(np.abs(evals[:-1])) < 1e-6


def test_oracle_equivalence_random_fields(gm3):
    params = LambdaParams()
    m = lambda_model(params, gm3)
    g = TimeGrid(0.0, 5.0, 60)
    rng = np.random.default_rng(42)
    for _ in range(10):
        fields = [ControlField(lb, rng.normal(scale=0.8, size=g.steps))
                  for lb in ("pump", "stokes")]
        traj = propagate_forward(m, fields, g)
        direct = trajectory_process(m, traj)
        oracle = reconstruct_process_from_oracle(m, fields, g)
        assert np.max(np.abs(direct.data - oracle.data)) < 1e-6


def test_purity_nonincreasing_zero_fields(gm3):
    m = lambda_model(LambdaParams(), gm3)
    g = TimeGrid(0.0, 20.0, 400)
    traj = propagate_forward(m, _const_fields(m, g, [0.0, 0.0]), g)
    pur = np.einsum("ki,ki->k", traj.conj(), traj).real / 81
    assert np.all(np.diff(pur) < 1e-12)


def test_propagation_agrees_with_unitary_formula(gm3):
    # constant fields, gamma = 0: chi(t) equals the chi of exp(-i H t)
    import scipy.linalg

    m = _free_model(gm3)
    g = TimeGrid(0.0, 3.0, 600)
    vals = [0.25, 0.65]
    traj = propagate_forward(m, _const_fields(m, g, vals), g)
    u = scipy.linalg.expm(-1j * m.hamiltonian(vals) * 3.0)
    want = chi_from_unitary(u, gm3).data
    got = trajectory_process(m, traj).data
    assert np.max(np.abs(got - want)) < 1e-8
