import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellpvi.elliptic import ModularPoint
from ellpvi.quantum import (NCPoly, R_pm, RelationSet, boundary_channel_identities, central_check, classical_bracket_limit,
                            lax_limit, membership_residual, quantum_determinant, quantum_lax, r_matrix_limit,
                            reflection_residual)

M = ModularPoint(0.3 + 0.8j)
HBAR = 0.17 + 0.05j
NT = np.array([0.4 - 0.1j, -0.3, 0.2 + 0.5j])
PAIRS = [(0.31 + 0.2j, -0.12 + 0.4j), (0.05 + 0.33j, 0.41 - 0.1j), (-0.27 + 0.15j, 0.18 + 0.52j)]
cplx = st.builds(complex, st.floats(-1, 1), st.floats(-1, 1))


def swap():
    P = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            P[i * 2 + j, j * 2 + i] = 1
    return P


def test_ncpoly_arithmetic():
    a, b = NCPoly.gen(1), NCPoly.gen(2)
    c = a.commutator(b)
    assert c.terms == {(1, 2): 1, (2, 1): -1}
    assert a.anticommutator(a).terms == {(1, 1): 2}
    assert (a @ b @ a).degree == 3
    assert a.mul(a @ b @ a, truncate=True).terms == {}
    with pytest.raises(ValueError):
        a.mul(a @ b @ a)
    assert (2 * a - a).terms == {(1,): 1}


def test_membership_of_span_elements():
    rels = RelationSet(HBAR, NT, M)
    span = rels.span(2)
    combo = span[0].scale(0.3) + span[3].scale(-1.2j)
    assert membership_residual([combo], span) < 1e-12
    assert membership_residual([NCPoly({(1, 2): 1.0})], span) > 1e-3


@pytest.mark.parametrize("z,w", PAIRS)
def test_reflection_equation(z, w):
    assert reflection_residual(z, w, HBAR, NT, M) < 1e-9
    assert reflection_residual(z, w, HBAR, np.zeros(3), M) < 1e-9


@settings(max_examples=5, deadline=None)
@given(st.lists(cplx, min_size=3, max_size=3))
def test_reflection_equation_generic_constants(nt):
    assert reflection_residual(*PAIRS[0], HBAR, np.array(nt), M) < 1e-9


def test_reflection_sensitivity_controls():
    z, w = PAIRS[0]
    assert reflection_residual(z, w, HBAR, NT, M, RelationSet(HBAR, NT, M, k_scale=1.01)) > 1e-3
    assert reflection_residual(z, w, HBAR, NT, M, RelationSet(HBAR, NT, M, "flipped")) > 1e-3


def test_boundary_channel_scalar_identities():
    assert max(boundary_channel_identities(*PAIRS[1], HBAR, M).values()) < 1e-9


@pytest.mark.parametrize("nt", [NT, np.zeros(3)])
def test_casimirs_are_central(nt):
    r = central_check(HBAR, nt, M)
    assert r["C1"] < 1e-9 and r["C2"] < 1e-9


def test_c2_linear_sign():
    assert central_check(HBAR, NT, M, linear=2.0)["C2"] > 1e-3


def test_quantum_determinant():
    rels = RelationSet(HBAR, NT, M)
    for z in (0.31 + 0.2j, -0.17 + 0.45j):
        rep = quantum_determinant(z, HBAR, NT, M, relations=rels)
        assert rep.residual < 1e-8
        shifted = quantum_determinant(z + 1, HBAR, NT, M, relations=rels)
        assert np.abs(rep.coefficients - shifted.coefficients).max() < 1e-9 * max(1, np.abs(rep.coefficients).max())
    assert quantum_determinant(0.31 + 0.2j, HBAR, NT, M, form="companion", relations=rels).residual > 1e-3


def test_r_matrices():
    P = swap()
    w = 0.2 + 0.1j
    # every channel has a simple pole with unit residue at z = w
    assert np.abs(1e-6 * R_pm(-1, w + 1e-6, w, HBAR, M) - 2 * P).max() < 1e-4
    assert np.abs(R_pm(1, 0.3, 0.1j, HBAR, M) - R_pm(1, 0.1j, 0.3, HBAR, M)).max() < 1e-14
    z = 0.31 + 0.2j
    e3, e4 = r_matrix_limit(z, w, 1e-3, M), r_matrix_limit(z, w, 1e-4, M)
    assert e4 < 0.2 * e3 and e4 < 1e-2
    assert r_matrix_limit(z, w, 1e-4, M, scalar_term=False) > 0.1


def test_classical_limits():
    assert classical_bracket_limit(NT, M) < 1e-6
    assert lax_limit(np.array([1.0, 0.2, 0.3j, -0.4]), NT, 0.31 + 0.2j, 1e-4, M) < 1e-2
    L = quantum_lax(HBAR, NT, 0.31 + 0.2j, M)
    Lc = quantum_lax(HBAR, NT, 0.31 + 0.2j, M, companion=True)
    vals = np.array([0.3, 1.0, -0.5j, 0.7])
    A, B = L.evaluate(vals), Lc.evaluate(vals)
    assert abs(A[0, 0] + A[1, 1] - (B[0, 0] + B[1, 1])) < 1e-12
