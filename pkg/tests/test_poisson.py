import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellpvi.elliptic import DomainError, ModularPoint
from ellpvi.flows import nu_prime_from_tilde
from ellpvi.poisson import (SchemaError, bihamiltonian_check, boundary_table, bracket_of_functions, casimir_c1,
                            casimir_c2, casimir_residual, cybe_residual, determinant_expansion, direct_sum, generator,
                            jacobi_residual, linear_rmatrix_check, linear_sl2, linear_slN, quadratic_exchange_check,
                            r_matrix, r_matrix_pole_residual, reflection_bracket_check, sfo_sl2_crosscheck, sfo_slN,
                            site_table, sklyanin_sl2, unreduced_reflection_check)

M = ModularPoint(0.15 + 0.95j)
NT = np.array([0.4 - 0.1j, -0.3, 0.2 + 0.5j])
NUP = nu_prime_from_tilde(NT, M)
cplx = st.builds(complex, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))


def vec(n):
    return st.lists(cplx, min_size=n, max_size=n).map(np.array)


TABLES = {
    "linear_sl2": linear_sl2(),
    "linear_sl3": linear_slN(3),
    "quadratic": sklyanin_sl2(M, NUP),
    "boundary": boundary_table(M, NT),
    "site": site_table(M),
    "sfo_sl2": sfo_slN(2, M),
    "sfo_sl3": sfo_slN(3, M),
}


@pytest.mark.parametrize("name", sorted(TABLES))
@settings(max_examples=20, deadline=None)
@given(data=st.data())
def test_jacobi_identity(name, data):
    t = TABLES[name]
    x = data.draw(vec(t.size))
    assert jacobi_residual(t, x) < 1e-10
    P = t.tensor(x)
    assert np.abs(P + P.T).max() == 0


def test_symmetric_sfo_variant_violates_jacobi():
    rng = np.random.default_rng(0)
    worst = max(jacobi_residual(sfo_slN(3, M, "symmetric"), rng.normal(size=9) + 1j * rng.normal(size=9)) for _ in range(5))
    assert worst > 1e-3


@settings(max_examples=30, deadline=None)
@given(vec(4))
def test_casimirs(x):
    t = TABLES["quadratic"]
    assert casimir_residual(t, casimir_c1(), x) < 1e-10
    assert casimir_residual(t, casimir_c2(M, NUP), x) < 1e-10
    assert casimir_residual(t, casimir_c2(M, NUP, "E2"), x) < 1e-10


def test_opposite_linear_sign_is_not_casimir():
    x = np.array([0.3, 1.0 - 0.2j, -0.5, 0.7j])
    assert casimir_residual(TABLES["quadratic"], casimir_c2(M, NUP, linear=2.0), x) > 1e-3


def test_single_axis_spin_commutes_with_S0():
    t = sklyanin_sl2(M)
    x = np.array([0.4, 1.3, 0, 0])
    for a in ("S1", "S2", "S3"):
        assert bracket_of_functions(t, generator("S0"), generator(a), x) == 0


def test_schema_and_block_structure():
    with pytest.raises(SchemaError):
        TABLES["quadratic"].index("S7")
    with pytest.raises(DomainError):
        linear_sl2()._add(0, 0, const=1)
    s = direct_sum([site_table(M), site_table(M)], [1, 2])
    x = np.arange(8) + 1j
    P = s.tensor(x)
    assert np.abs(P[:4, 4:]).max() == 0
    assert np.allclose(P[:4, :4], site_table(M).tensor(x[:4]))
    assert s.generators[5] == (2, "S1")


@pytest.mark.parametrize("N", [2, 3])
def test_r_matrix_structure(N):
    z, w, v = 0.31 + 0.2j, -0.12 + 0.4j, 0.05 - 0.3j
    assert cybe_residual(z, w, v, M, N) < 1e-9
    assert r_matrix_pole_residual(w, M, N) < 1e-8
    P = np.zeros((N * N, N * N))
    for i in range(N):
        for j in range(N):
            P[i * N + j, j * N + i] = 1
    r = r_matrix(z, w, M, N)
    assert np.abs(P @ r @ P + r_matrix(w, z, M, N)).max() < 1e-12 * np.abs(r).max()


@pytest.mark.parametrize("N", [2, 3])
def test_exchange_relations(N):
    rng = np.random.default_rng(N)
    z, w = 0.31 + 0.2j, -0.12 + 0.4j
    S = rng.normal(size=N * N - 1) + 1j * rng.normal(size=N * N - 1)
    assert linear_rmatrix_check(S, z, w, M, N) < 1e-9
    X = rng.normal(size=N * N) + 1j * rng.normal(size=N * N)
    assert quadratic_exchange_check(X, z, w, M, N) < 1e-9
    assert quadratic_exchange_check(X, z, w, M, N, "symmetric") > 1e-3


def test_sfo_rank_two_equals_quadratic_bracket():
    rng = np.random.default_rng(5)
    for _ in range(10):
        assert sfo_sl2_crosscheck(rng.normal(size=4) + 1j * rng.normal(size=4), M) < 1e-10


@settings(max_examples=15, deadline=None)
@given(vec(4), vec(3))
def test_reflection_brackets(x, nt):
    r = reflection_bracket_check(x, nt, 0.31 + 0.2j, -0.12 + 0.4j, M)
    assert r["quadratic"] < 1e-9 and r["linear"] < 1e-9


def test_unreduced_reflection_is_negative_control():
    r = unreduced_reflection_check(np.array([0.3, 1.0, -0.5j, 0.7]), NT, 0.31 + 0.2j, -0.12 + 0.4j, M)
    assert min(r.values()) > 1e-3


@settings(max_examples=15, deadline=None)
@given(vec(4), vec(3))
def test_bihamiltonian_structure(x, nt):
    r = bihamiltonian_check(x, nt, M)
    assert r["equation_of_motion"] < 1e-10 and r["pencil_jacobi"] < 1e-10
    r0 = bihamiltonian_check(x, np.zeros(3), M)
    assert r0["equation_of_motion"] < 1e-10


def test_determinant_constant_term_is_casimir_combination():
    d = determinant_expansion(np.array([0.3, 1.0, -0.5j, 0.7]), NT, M)
    assert max(d["c1_residual"], d["c2_residual"], d["fit_residual"]) < 1e-10
