import math

import numpy as np
import pytest
from scipy.linalg import expm

from crosskerr.branches import compute_branch
from crosskerr.config import ConfigError, SystemConfig
from crosskerr.fock import (
    FockSpace,
    FockState,
    PropagatorOptions,
    apply_decoupled,
    block_hamiltonian,
    build_mech_operators,
    decoupled_block_matrix,
    displacement_matrix,
    expect_b,
    expect_phonons,
    fidelity,
    full_hamiltonian,
    poisson_block_count,
    prepare_initial,
    propagate,
    purity,
    reduced_mech,
    squeeze_unitary,
    su11_disentangle,
    thermal_member_count,
)
from crosskerr.profiles import ConstantProfile, SinusoidProfile


def single_block_state(n: int, phi: np.ndarray) -> FockState:
    phi = np.asarray(phi, dtype=complex)
    return FockState(ns=np.array([n]), c=np.array([1.0 + 0j]),
                     weights=np.array([1.0]), phi=phi[None, None, :])


def test_ladder_matrix_elements():
    ops = build_mech_operators(2)
    np.testing.assert_array_equal(ops.b, np.array([[0, 1], [0, 0]], dtype=complex))
    ops = build_mech_operators(8)
    np.testing.assert_allclose(ops.b_plus, ops.b_plus.conj().T)
    assert np.all(np.diag(ops.b_plus) == 0)
    assert ops.b2_plus[2, 0] == pytest.approx(math.sqrt(2.0))
    comm = ops.b @ ops.bdag - ops.bdag @ ops.b
    np.testing.assert_allclose(np.diag(comm)[:-1], 1.0, atol=1e-14)


def test_block_hamiltonian_structure():
    ops = build_mech_operators(10)
    cfg = SystemConfig(omega_c=ConstantProfile(0.7))
    h0 = block_hamiltonian(cfg, 0, 1.3, ops)
    np.testing.assert_allclose(h0, np.diag(np.arange(10, dtype=complex)))
    cfg2 = SystemConfig(omega_c=ConstantProfile(0.7),
                        g1_plus=ConstantProfile(0.1),
                        g2_minus=ConstantProfile(0.05),
                        g2_prime=ConstantProfile(0.02))
    h = block_hamiltonian(cfg2, 3, 0.4, ops)
    assert np.max(np.abs(h - h.conj().T)) < 1e-14


def test_full_hamiltonian_conserves_photon_number():
    cfg = SystemConfig(omega_c=SinusoidProfile(0.5, 1.0, 0.2, 0.7),
                       g1_plus=ConstantProfile(0.1), g1_minus=ConstantProfile(0.2),
                       g2_plus=ConstantProfile(0.15), g2_minus=ConstantProfile(0.05),
                       g2_prime=ConstantProfile(0.3))
    space = FockSpace(6, 6)
    num_a = np.kron(np.diag(np.arange(6, dtype=float)), np.eye(6))
    h = full_hamiltonian(cfg, 0.9, space)
    assert np.max(np.abs(h - h.conj().T)) < 1e-14
    assert np.max(np.abs(h @ num_a - num_a @ h)) < 1e-12


def test_tail_counts():
    assert poisson_block_count(0.0, 1e-12) == 1
    n = poisson_block_count(1.0, 1e-12)
    w = math.exp(-1.0)
    cum = sum(w * 1.0 ** k / math.factorial(k) for k in range(n))
    assert 1.0 - cum < 1e-12
    assert thermal_member_count(0.0, 1e-12) == 1
    p = thermal_member_count(0.5, 1e-12)
    assert math.tanh(0.5) ** (2 * p) < 1e-12


def test_prepare_initial_shapes_and_moments():
    cfg = SystemConfig(mu=0.8 + 0.3j, r_T=0.4, cutoff_b=40)
    state = prepare_initial(cfg)
    np.testing.assert_allclose(state.member_norms(), 1.0, atol=1e-10)
    assert expect_phonons(state) == pytest.approx(math.sinh(0.4) ** 2, abs=1e-10)
    assert abs(expect_b(state)) < 1e-14
    # optical occupation reproduces |mu|^2
    n_opt = float(np.sum(np.abs(state.c) ** 2 * state.ns))
    assert n_opt == pytest.approx(abs(0.8 + 0.3j) ** 2, abs=1e-10)


def test_prepare_initial_degenerate_cases():
    vac = prepare_initial(SystemConfig(mu=0.0, r_T=0.0))
    assert vac.ns.size == 1 and vac.weights.size == 1
    assert expect_phonons(vac) == 0.0
    with pytest.raises(ConfigError):
        prepare_initial(SystemConfig(mu=4.0, cutoff_a=5))
    with pytest.raises(ConfigError):
        prepare_initial(SystemConfig(r_T=2.0, cutoff_b=10))


def test_displaced_vacuum_occupation():
    gamma = 0.6 - 0.2j
    n_b = 30
    phi = displacement_matrix(gamma, n_b)[:, 0]
    state = single_block_state(2, phi)
    assert expect_phonons(state) == pytest.approx(abs(gamma) ** 2, abs=1e-12)
    assert expect_b(state) == pytest.approx(gamma, abs=1e-12)


def test_displacement_matrix_matches_expm():
    z = 0.4 + 0.7j
    n_b = 40
    ops = build_mech_operators(n_b)
    ref = expm(z * ops.bdag - np.conj(z) * ops.b)
    d = displacement_matrix(z, n_b)
    np.testing.assert_allclose(d[:20, :20], ref[:20, :20], atol=1e-10)


def test_free_evolution_closes():
    cfg = SystemConfig(omega_c=ConstantProfile(0.7), mu=1.0, r_T=0.2, cutoff_b=30)
    state = prepare_initial(cfg)
    out = propagate(state, cfg, 2.0 * math.pi)
    for i, n in enumerate(state.ns):
        phase = np.exp(-1j * 0.7 * n * 2.0 * math.pi)
        np.testing.assert_allclose(out.phi[:, i, :], phase * state.phi[:, i, :],
                                   atol=1e-10)


def test_one_step_equals_many_for_constant_h():
    cfg = SystemConfig(g1_plus=ConstantProfile(0.1), g2_plus=ConstantProfile(0.05),
                       mu=0.7, r_T=0.1, cutoff_b=30)
    state = prepare_initial(cfg)
    one = propagate(state, cfg, 3.0, PropagatorOptions(exact_constant=True))
    many = propagate(state, cfg, 3.0, PropagatorOptions(dt=0.3, exact_constant=False))
    fmin, _ = fidelity(one, many)
    assert fmin > 1.0 - 1e-10


def test_propagate_rejects_backwards():
    cfg = SystemConfig()
    state = prepare_initial(cfg)
    with pytest.raises(ValueError):
        propagate(state, cfg, 1.0, tau_start=2.0)


def test_fidelity_basics():
    phi = np.zeros(6, dtype=complex)
    phi[0] = 1.0
    s = single_block_state(0, phi)
    assert fidelity(s, s) == (1.0, 1.0)
    other = np.zeros(6, dtype=complex)
    other[1] = 1.0
    assert fidelity(s, single_block_state(0, other))[0] == pytest.approx(0.0)
    out = propagate(s, SystemConfig(), 0.0)
    assert fidelity(s, out)[0] == pytest.approx(1.0)


def test_reduced_state_properties():
    cfg = SystemConfig(mu=0.9, r_T=0.3, g1_plus=ConstantProfile(0.1), cutoff_b=40)
    state = propagate(prepare_initial(cfg), cfg, 2.0)
    rho = reduced_mech(state)
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-12


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0])
def test_initial_thermal_purity(r):
    cfg = SystemConfig(r_T=r, cutoff_b=70)
    rho = reduced_mech(prepare_initial(cfg))
    assert purity(rho) == pytest.approx(1.0 / math.cosh(2.0 * r), abs=1e-10)


def test_su11_identity_and_squeeze():
    xi_p, lam0, xi_m = su11_disentangle(1.0, 0.0)
    assert xi_p == 0.0 and lam0 == 0.0 and xi_m == 0.0
    r = 0.4
    xi_p, lam0, xi_m = su11_disentangle(math.cosh(r), math.sinh(r))
    assert xi_p == pytest.approx(math.tanh(r), abs=1e-14)
    assert lam0 == pytest.approx(-2.0 * math.log(math.cosh(r)), abs=1e-14)
    assert xi_m == pytest.approx(-math.tanh(r), abs=1e-14)


def test_su11_action_reproduces_bogoliubov():
    n_b = 60
    ops = build_mech_operators(n_b)
    rng = np.random.default_rng(3)
    for _ in range(4):
        beta = (rng.uniform(-0.5, 0.5) + 1j * rng.uniform(-0.5, 0.5))
        alpha = math.sqrt(1.0 + abs(beta) ** 2) * np.exp(1j * rng.uniform(-3, 3))
        u = squeeze_unitary(*su11_disentangle(alpha, beta), n_b)
        lhs = u.conj().T @ ops.b @ u
        rhs = alpha * ops.b + beta * ops.bdag
        # the identity is exact only in the untruncated space; compare well
        # below the cutoff where the squeezed tail has died off
        assert np.max(np.abs((lhs - rhs)[:10, :10])) < 1e-8
        uu = u.conj().T @ u
        assert np.max(np.abs((uu - np.eye(n_b))[:10, :10])) < 1e-8


def test_su11_rejects_bad_input():
    with pytest.raises(ValueError):
        su11_disentangle(1.5, 0.0)
    with pytest.raises(ValueError):
        su11_disentangle(np.array([1.0, 0.0]), np.array([0.0, 1.0]))


def test_su11_branch_tracking():
    # alpha winds through the negative real axis; the log must stay continuous
    taus = np.linspace(0.0, 4.0 * math.pi, 200)
    alpha = np.exp(1j * taus)
    beta = np.zeros_like(alpha)
    _, lam0, _ = su11_disentangle(alpha, beta)
    np.testing.assert_allclose(np.diff(lam0.imag), 2.0 * np.diff(taus), atol=1e-12)


def test_apply_decoupled_zero_coupling():
    cfg = SystemConfig(omega_c=ConstantProfile(0.4), mu=0.8, r_T=0.2, cutoff_b=30)
    grid = np.linspace(0.0, 5.0, 6)
    state = prepare_initial(cfg)
    branches = [compute_branch(cfg, n, grid) for n in state.ns]
    evolved = propagate(state, cfg, grid[-1])
    dec = apply_decoupled(cfg, branches, len(grid) - 1, state)
    fmin, _ = fidelity(evolved, dec)
    assert fmin > 1.0 - 1e-10


def test_decoupled_matrix_is_unitary_on_core():
    cfg = SystemConfig(g1_plus=ConstantProfile(0.05), g2_prime=ConstantProfile(0.02))
    grid = np.linspace(0.0, 4.0, 9)
    br = compute_branch(cfg, 2, grid)
    u = decoupled_block_matrix(cfg, br, 8, 40)
    uu = u.conj().T @ u
    assert np.max(np.abs((uu - np.eye(40))[:20, :20])) < 1e-10
