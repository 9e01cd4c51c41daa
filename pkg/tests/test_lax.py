import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellpvi.algebra import PAULI, SlnBasis
from ellpvi.elliptic import E2, ModularPoint, phi, sl2_omega, varphi_sl2
from ellpvi.flows import ci_rhs, gyro_inertia, gyro_rhs, nu_lax_from_tilde, top_rhs
from ellpvi.lax import (CMState, DegenerateConfigurationError, GyroState, MisuseError, build_ci_lax, build_cm_lax,
                        build_generic_egg, build_nonautonomous, build_top_lax, build_zvg_lax, ci_hamiltonian,
                        lax_residual, quasi_periodicity_residual, residue_residual, sigma_to_t, spectral_invariants,
                        zvg_lax_nu_prime_form)

M = ModularPoint(0.2 + 1.05j)
cplx = st.builds(complex, st.floats(-1, 1), st.floats(-1, 1))
spin = st.lists(cplx, min_size=3, max_size=3).map(np.array)
zpt = st.builds(lambda x, y: complex(x + y * M.tau), st.floats(0.1, 0.4), st.floats(0.1, 0.4))


def off_poles(z, m=M, guard=0.06):
    return all(m.distance_to_lattice(z - w) > guard for w in m.omega)


@settings(max_examples=30, deadline=None)
@given(spin, spin, zpt, st.sampled_from([0, 1.0, 0.5 - 0.2j]))
def test_gyrostat_zero_curvature(S, nt, z, kappa):
    g = GyroState(S, nt)
    L, Mx = build_zvg_lax(g, M, kappa)
    rate = gyro_rhs(S, g.nu_prime(M), gyro_inertia(M)) / (kappa or 1)
    scale = max(1.0, float(np.abs(S).max() + np.abs(nt).max()) ** 2)
    assert lax_residual(L, Mx, rate, z) < 1e-9 * scale
    assert quasi_periodicity_residual(L, z) < 1e-10


def test_gyrostat_two_forms_agree():
    g = GyroState(np.array([0.3, -0.2j, 0.5]), np.array([0.1, 0.4, -0.3j]))
    L, _ = build_zvg_lax(g, M)
    alt = zvg_lax_nu_prime_form(g, M)
    for z in (0.31 + 0.17j, -0.22 + 0.41j):
        assert np.abs(L(z) - alt(z)).max() < 1e-10


def test_gyrostat_residues_and_single_axis_trace():
    L, _ = build_zvg_lax(GyroState(np.array([1.0, 0, 0])), M)
    assert residue_residual(L) < 1e-12
    z = 0.27 + 0.33j
    assert abs(np.trace(L(z) @ L(z)) / 2 - varphi_sl2(1, z, M) ** 2) < 1e-12


def test_gyrostat_spectral_fit():
    L, _ = build_zvg_lax(GyroState(np.array([0.3, -0.2j, 0.5]), np.array([0.1, 0.4, -0.3j])), M)
    fit = spectral_invariants(L, 2, orders=(2,))
    assert fit.residual < 1e-8
    traceless = spectral_invariants(L, 1)
    assert abs(traceless.constant) < 1e-12 and all(abs(c) < 1e-12 for c in traceless.coefficients.values())


def test_gyrostat_matches_generic_degree_one():
    S, nt = np.array([0.3, -0.2j, 0.5]), np.array([0.1, 0.4, -0.3j])
    L, _ = build_zvg_lax(GyroState(S, nt), M)
    pts = [0] + [sl2_omega(a, M) for a in (1, 2, 3)]
    spins = [sigma_to_t(S)] + [sigma_to_t(np.eye(3)[a] * nt[a]) for a in range(3)]
    E = build_generic_egg("deg1", 2, pts, spins, M)
    z = 0.31 + 0.17j
    assert np.abs(E(z) - L(z)).max() < 1e-13
    assert quasi_periodicity_residual(E, z) < 1e-10


def test_nonautonomous_dispatch_and_small_kappa():
    g = GyroState(np.array([0.4, 0.1, -0.2j]), np.array([0.2, 0, 0.1]))
    with pytest.raises(MisuseError):
        build_nonautonomous("ZVG", g, M, 0)
    z = 0.3 + 0.2j
    L0, _ = build_zvg_lax(g, M)
    Lk, _ = build_nonautonomous("ZVG", g, M, 1e-9)
    assert np.abs(L0(z) - Lk(z)).max() < 1e-8


def test_spinless_calogero_entries_and_residue():
    u = np.array([0.2 + 0.1j, -0.2 - 0.1j])
    st_ = CMState.spinless(u, np.array([0.3, -0.3]), 0.7)
    L, _ = build_cm_lax(st_, M)
    z = 0.31 + 0.17j
    assert abs(L(z)[0, 1] - 0.7 * phi(2 * u[0], z, M)) < 1e-13
    assert abs(L(z)[1, 0] - 0.7 * phi(-2 * u[0], z, M)) < 1e-13
    assert residue_residual(L) < 1e-12
    assert quasi_periodicity_residual(L, z) < 1e-10
    egg = build_generic_egg("deg0", 2, [0], [st_.p], M, moduli=u, momenta=st_.v)
    assert np.abs(egg(z) - L(z)).max() < 1e-14


def test_calogero_quadratic_invariant_coefficient():
    u = np.array([0.2 + 0.1j, -0.2 - 0.1j])
    L, _ = build_cm_lax(CMState.spinless(u, np.array([0.3, -0.3]), 0.7), M)
    fit = spectral_invariants(L, 2, orders=(2,))
    assert abs(fit.coefficients[(2, 0)] - 0.49) < 1e-9


def test_ci_reads_off_hamiltonian():
    nt = np.array([0.3, -0.2, 0.5j, 0.1])
    u, v = 0.13 + 0.07j, 0.4 - 0.2j
    L, _ = build_ci_lax(u, v, nt, M)
    H = ci_hamiltonian(u, v, nu_lax_from_tilde(nt), M)
    for z in (0.31 + 0.2j, -0.17 + 0.33j, 0.05 + 0.6j):
        lhs = np.trace(L(z) @ L(z)) / 4 - 0.5 * sum(nt[a] ** 2 * E2(z - M.omega[a], M) for a in range(4))
        assert abs(lhs - H) < 1e-10
    free, _ = build_ci_lax(u, v, np.zeros(4), M)
    assert np.abs(free(0.2 + 0.3j) - np.diag([v, -v])).max() < 1e-15


def test_ci_rejects_half_period_coordinate():
    with pytest.raises(DegenerateConfigurationError):
        build_ci_lax(0.25, 0.1, np.ones(4), M)


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("kappa", [0, 1.0])
def test_top_zero_curvature(N, kappa):
    b = SlnBasis(N)
    rng = np.random.default_rng(N)
    for _ in range(5):
        S = rng.normal(size=b.dim) + 1j * rng.normal(size=b.dim)
        L, Mx = build_top_lax(S, M, kappa)
        z = 0.31 + 0.2j + 0.1 * rng.normal()
        assert lax_residual(L, Mx, top_rhs(S, M, b) / (kappa or 1), z) < 1e-9
        assert quasi_periodicity_residual(L, z) < 1e-10


def test_ci_isomonodromic_residual():
    nt = np.array([0.3, -0.2, 0.5j, 0.1])
    u, v = 0.13 + 0.07j, 0.4 - 0.2j
    L, Mx = build_ci_lax(u, v, nt, M, 1.0)
    rate = np.array(ci_rhs(u, v, nu_lax_from_tilde(nt), M))
    assert lax_residual(L, Mx, rate, 0.31 + 0.2j) < 1e-8
    with pytest.raises(MisuseError):
        lax_residual(L, Mx, rate, 0.31 + 0.2j, kappa=0)


def test_pauli_basis_is_standard():
    assert np.allclose(PAULI[1] @ PAULI[2], 1j * PAULI[3])
