import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellpvi.algebra import _q_lambda
from ellpvi.dynamics import FlowSpec, integrate
from ellpvi.elliptic import ModularPoint
from ellpvi.flows import HADAMARD
from ellpvi.hecke import (build_xi, cm_to_zvg_coords, constant_maps, modify_lax, pushforward_residual, residue_route,
                          zvg_constants_from_ci)
from ellpvi.lax import CMState, DegenerateConfigurationError, build_cm_lax, quasi_periodicity_residual

M = ModularPoint(0.15 + 0.95j)
NU = np.array([0.3, 0.2, 0.1j, 0.4])
cplx = st.builds(complex, st.floats(-1, 1), st.floats(-1, 1))
upt = st.builds(complex, st.floats(0.08, 0.2), st.floats(0.05, 0.2))


@pytest.mark.parametrize("u", [np.array([0.23 + 0.11j, -0.23 - 0.11j]), np.array([0.1 + 0.2j, -0.3 + 0.05j, 0.2 - 0.25j])])
def test_kernel_and_period_multiplier(u):
    xi = build_xi(u, M)
    N = len(u)
    Q, _ = _q_lambda(N)
    assert np.abs(xi(0) @ xi.kernel_vector).max() < 1e-13
    z = 0.17 + 0.3j
    assert np.abs(xi(z + 1) + Q @ xi(z)).max() < 1e-12


def test_rank_two_modification_is_generically_invertible():
    xi = build_xi([0.23 + 0.11j, -0.23 - 0.11j], M)
    rng = np.random.default_rng(3)
    for _ in range(10):
        z = rng.uniform(-0.5, 0.5) + rng.uniform(-0.5, 0.5) * M.tau
        assert abs(np.linalg.det(xi(z))) > 1e-6
    with pytest.raises(DegenerateConfigurationError):
        build_xi([0.2, 1.2], M)


def test_modified_calogero_has_top_multipliers():
    u = 0.23 + 0.11j
    L0, _ = build_cm_lax(CMState.spinless(np.array([u, -u]), np.array([0.4, -0.4]), 0.6), M)
    L1 = modify_lax(build_xi([u, -u], M), L0)
    for z in (0.17 + 0.3j, -0.21 + 0.12j):
        assert quasi_periodicity_residual(L1, z) < 1e-9


@settings(max_examples=15, deadline=None)
@given(upt, cplx, cplx, st.lists(cplx, min_size=4, max_size=4))
def test_two_routes_to_the_spin_agree(u, v, k, nt):
    a = cm_to_zvg_coords(u, v, np.array(nt), k, M).S
    b = residue_route(u, v, np.array(nt), k, M).S
    assert np.abs(a - b).max() < 1e-8 * max(1.0, np.abs(a).max())


def test_free_spin_is_nilpotent():
    # with all couplings off the spin Casimir is v^2 c(tau) with c(tau) = 0
    for u in np.linspace(0.06, 0.2, 20) + 0.1j:
        S = cm_to_zvg_coords(u, 0.7, np.zeros(4), 0, M).S
        assert abs(np.sum(S ** 2)) < 1e-12 * np.sum(np.abs(S) ** 2)
        assert np.abs(S).max() > 0.1


def test_constant_maps():
    nt, nup = constant_maps([0.3] * 4, M)
    assert np.allclose(nt, [0.6, 0, 0, 0])
    assert np.allclose(0.5 * HADAMARD @ (0.5 * HADAMARD.T), np.eye(4))
    assert nup.shape == (3,)
    assert np.allclose(zvg_constants_from_ci([1, 2, 3, 4]), [-3, 4, 2])


def test_pushforward_autonomous_and_isomonodromic():
    ci = integrate(FlowSpec("CI", {"nu": NU}, tau0=M.tau), [0.23 + 0.31j, 0.1 - 0.2j], 1.0, rtol=1e-12, atol=1e-14)
    assert pushforward_residual(ci, NU) < 1e-6
    ep = integrate(FlowSpec("EPVI", {"nu": NU}, tau0=M.tau, direction=0.05 + 0.03j), [0.23 + 0.31j, 0.1 - 0.2j], 1.0,
                   rtol=1e-12, atol=1e-14)
    assert pushforward_residual(ep, NU, 1.0) < 1e-5
    # the map is covariant in the connection level
    assert pushforward_residual(ep, NU, 2.0) < 1e-5
