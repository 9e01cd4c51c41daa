import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellpvi.chain import (ChainState, ConstraintError, boundary_hamiltonian, commutativity_residual,
                          degenerate_site_residual, hamiltonian_gradient, hamiltonian_residual,
                          reflection_product_residual, site_determinant_residual, special_point, transfer_gradient,
                          transfer_h)
from ellpvi.elliptic import E2, DomainError, ModularPoint
from ellpvi.poisson import sl2_group_lax

M = ModularPoint(0.15 + 0.95j)
PAIRS = [(0.31 + 0.2j, -0.12 + 0.4j), (0.05 + 0.33j, 0.41 - 0.1j), (-0.27 + 0.15j, 0.18 + 0.52j)]


def test_empty_chain_is_boundary_trace():
    st_ = ChainState.random(0, M, seed=1)
    z = 0.31 + 0.2j
    K = [sl2_group_lax(S, nt, z, M) for S, nt in (st_.plus, st_.minus)]
    assert abs(transfer_h(st_, z) - np.trace(K[0] @ K[1])) < 1e-13


def test_transfer_is_periodic():
    st_ = ChainState.random(2, M, seed=2)
    z = 0.31 + 0.2j
    assert abs(transfer_h(st_, z + 1) - transfer_h(st_, z)) < 1e-10 * abs(transfer_h(st_, z))


def test_gradient_matches_finite_differences():
    st_ = ChainState.random(2, M, seed=3)
    z = 0.31 + 0.2j
    h0, g = transfer_gradient(st_, z)
    flat = st_.flat()
    eps = 1e-6
    for k in (0, 5, 9, 14):
        bumped = flat.copy()
        bumped[k] += eps
        comps = bumped.reshape(-1, 4)
        other = ChainState(comps[1:-1], (comps[0], st_.minus[1]), (comps[-1], st_.plus[1]), M)
        assert abs((transfer_h(other, z) - h0) / eps - g[k]) < 1e-5 * max(1, abs(g[k]))


@pytest.mark.parametrize("n_sites", [0, 1, 2, 3])
def test_transfer_functions_commute(n_sites):
    st_ = ChainState.random(n_sites, M, seed=10 + n_sites)
    assert max(commutativity_residual(st_, z, w) for z, w in PAIRS) < 1e-7


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_commutativity_over_random_chains(seed, n_sites):
    st_ = ChainState.random(n_sites, M, seed=seed)
    assert commutativity_residual(st_, *PAIRS[0]) < 1e-7


@pytest.mark.parametrize("n_sites", [1, 2, 3])
def test_dropping_boundary_factor_breaks_commutativity(n_sites):
    st_ = ChainState.random(n_sites, M, seed=20 + n_sites)
    good = commutativity_residual(st_, *PAIRS[0])
    bad = commutativity_residual(st_, *PAIRS[0], boundary_scale=1.0)
    assert bad > 1e3 * good and bad > 1e-4


def test_constant_boundaries():
    st_ = ChainState.random(2, M, seed=4)
    st_.minus = (np.array([1.0, 0, 0, 0]), np.zeros(3))
    st_.plus = (np.array([1.0, 0, 0, 0]), np.zeros(3))
    assert max(commutativity_residual(st_, z, w) for z, w in PAIRS) < 1e-9


def test_site_determinant_is_casimir():
    st_ = ChainState.random(2, M, seed=5)
    assert max(site_determinant_residual(st_, i, 0.31 + 0.2j) for i in range(2)) < 1e-10


def test_special_point_degenerates_every_site():
    C = 0.7 + 0.3j
    st_ = ChainState.random(3, M, seed=6, C=C)
    assert np.allclose(st_.site_constants(), C)
    z0 = special_point(C, M)
    assert abs(E2(z0, M) - C) < 1e-9
    assert degenerate_site_residual(st_, z0) < 1e-10
    assert reflection_product_residual(st_, z0) < 1e-10


def test_unequal_site_constants_rejected():
    st_ = ChainState.random(2, M, seed=7)
    with pytest.raises(ConstraintError):
        st_.common_constant()
    with pytest.raises(DomainError):
        ChainState.random(0, M).common_constant()


@pytest.mark.parametrize("n_sites", [1, 2, 3])
def test_boundary_hamiltonian_is_integral(n_sites):
    st_ = ChainState.random(n_sites, M, seed=30 + n_sites, C=0.7 + 0.3j)
    assert max(hamiltonian_residual(st_, z) for z, _ in PAIRS) < 1e-6


def test_hamiltonian_single_site_and_branch_independence():
    st_ = ChainState.random(1, M, seed=8, C=0.4 - 0.2j, boundary_field=False)
    H = boundary_hamiltonian(st_)
    g = hamiltonian_gradient(st_)
    flat = st_.flat()
    eps = 1e-7
    bumped = flat.copy()
    bumped[5] += eps
    comps = bumped.reshape(-1, 4)
    other = ChainState(comps[1:-1], (comps[0], st_.minus[1]), (comps[-1], st_.plus[1]), M)
    # the gradient is of the log sum, so the principal-branch choice does not enter
    dH = (boundary_hamiltonian(other, st_.common_constant()) - H) / eps
    assert abs(dH - g[5]) < 1e-5 * max(1, abs(g[5]))
