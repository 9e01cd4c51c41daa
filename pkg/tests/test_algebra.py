import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellpvi.algebra import (PAULI, SlnBasis, basis_indices, cyclic, levi_civita, reduction_sign, sigma_coefficients,
                            structure_constant, t_matrix)
from ellpvi.elliptic import DomainError, e_N

idx = st.tuples(st.integers(-6, 6), st.integers(-6, 6))


def test_levi_civita_and_cyclic():
    assert levi_civita(1, 2, 3) == 1 and levi_civita(2, 1, 3) == -1 and levi_civita(1, 1, 3) == 0
    assert [cyclic(a) for a in (1, 2, 3)] == [(2, 3), (3, 1), (1, 2)]


def test_structure_constant_values():
    assert structure_constant((1, 0), (0, 1), 2) == pytest.approx(2 / math.pi)
    assert structure_constant((1, 2), (1, 2), 3) == 0


@settings(max_examples=50, deadline=None)
@given(idx, idx, st.sampled_from([2, 3, 4]))
def test_structure_constant_antisymmetric(a, b, N):
    assert structure_constant(a, b, N) == pytest.approx(-structure_constant(b, a, N), abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(idx, idx, st.sampled_from([2, 3]))
def test_product_cocycle_and_commutator(a, b, N):
    if (a[0] + b[0]) % N == 0 and (a[1] + b[1]) % N == 0:
        return
    Ta, Tb = t_matrix(*a, N), t_matrix(*b, N)
    s = (a[0] + b[0], a[1] + b[1])
    Ts = t_matrix(*s, N)
    cross = a[0] * b[1] - a[1] * b[0]
    assert np.abs(Ta @ Tb - N / (2j * math.pi) * e_N(-cross / 2, N) * Ts).max() < 1e-13
    # with these generators the commutator carries -C(a, b)
    assert np.abs(Ta @ Tb - Tb @ Ta + structure_constant(a, b, N) * Ts).max() < 1e-13


@settings(max_examples=40, deadline=None)
@given(idx, st.sampled_from([2, 3, 4]))
def test_reduction_sign(a, N):
    raw = t_matrix(*a, N)
    red = t_matrix(a[0] % N, a[1] % N, N)
    assert np.abs(raw - reduction_sign(*a, N) * red).max() < 1e-13


def test_basis_roundtrip():
    rng = np.random.default_rng(1)
    for N in (2, 3, 4):
        b = SlnBasis(N)
        assert b.dim == N * N - 1 == len(basis_indices(N))
        S = rng.normal(size=b.dim) + 1j * rng.normal(size=b.dim)
        assert np.abs(b.decompose(b.combine(S)) - S).max() < 1e-12
    with pytest.raises(DomainError):
        SlnBasis(1)


def test_bracket_coefficients_match_matrices():
    b = SlnBasis(3)
    for a in b.indices:
        for c in b.indices:
            coef, s = b.bracket_coefficients(a, c)
            com = b.matrices[b.position[a]] @ b.matrices[b.position[c]] - b.matrices[b.position[c]] @ b.matrices[b.position[a]]
            expect = np.zeros((3, 3)) if s is None else coef * b.matrices[b.position[s]]
            assert np.abs(com - expect).max() < 1e-12


def test_sigma_coefficients():
    A = 0.3 * PAULI[0] + (1 - 2j) * PAULI[1] - 0.5 * PAULI[3]
    assert np.allclose(sigma_coefficients(A), [0.3, 1 - 2j, 0, -0.5])
