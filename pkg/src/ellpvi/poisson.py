"""Classical Poisson brackets as evaluatable tables, plus r-matrix checks.

A bracket table stores ``{x_i, x_j}`` as a polynomial of degree at most two in
the generators, in tensor form ``c0 + c1 . x + x . c2 . x``.  Antisymmetry holds
by construction and derivatives of the Poisson tensor are exact, so the Jacobi
residual is free of differencing error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import PAULI, SlnBasis, basis_indices, is_zero_index, levi_civita, reduction_sign, structure_constant, t_matrix
from .elliptic import E1, E2, DomainError, LatticeIndex, ModularPoint, sl2_omega, varphi_gamma, varphi_sl2, weierstrass_p
from .flows import nu_prime_from_tilde


class SchemaError(KeyError):
    """An observable refers to a generator the table does not know."""


KINDS = ("linear_slN", "linear_sl2", "sklyanin_sl2", "SFO_slN", "boundary", "site", "sum")


@dataclass
class BracketTable:
    """Quadratic Poisson tensor ``{x_i, x_j} = c0_ij + c1_ijk x_k + c2_ijkl x_k x_l``."""

    generators: tuple
    kind: str
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, generators, kind: str, **meta) -> "BracketTable":
        n = len(generators)
        return cls(tuple(generators), kind, np.zeros((n, n), complex), np.zeros((n, n, n), complex),
                   np.zeros((n, n, n, n), complex), dict(meta))

    @property
    def size(self) -> int:
        return len(self.generators)

    def index(self, name) -> int:
        try:
            return self.generators.index(name)
        except ValueError:
            raise SchemaError(f"unknown generator {name!r}") from None

    def _add(self, i: int, j: int, const=0j, lin=None, quad=None) -> None:
        """Accumulate into {x_i, x_j} (and the antisymmetric partner)."""
        if i == j:
            raise DomainError("the bracket of a generator with itself is zero")
        self.c0[i, j] += const
        self.c0[j, i] -= const
        for k, c in (lin or {}).items():
            self.c1[i, j, k] += c
            self.c1[j, i, k] -= c
        for (k, l), c in (quad or {}).items():
            self.c2[i, j, k, l] += c
            self.c2[j, i, k, l] -= c

    def tensor(self, state) -> np.ndarray:
        x = np.asarray(state, dtype=complex)
        return self.c0 + self.c1 @ x + np.einsum("ijkl,k,l->ij", self.c2, x, x)

    def tensor_gradient(self, state) -> np.ndarray:
        """D[l, i, j] = d {x_i, x_j} / d x_l."""
        x = np.asarray(state, dtype=complex)
        sym = self.c2 + self.c2.transpose(0, 1, 3, 2)
        return np.moveaxis(self.c1 + np.einsum("ijkl,l->ijk", sym, x), 2, 0)

    def bracket(self, a, b, state) -> complex:
        return self.tensor(state)[self.index(a), self.index(b)]

    def scaled(self, s) -> "BracketTable":
        return BracketTable(self.generators, self.kind, s * self.c0, s * self.c1, s * self.c2, dict(self.meta))

    def __add__(self, other: "BracketTable") -> "BracketTable":
        if self.generators != other.generators:
            raise SchemaError("tables must share generators to be added")
        return BracketTable(self.generators, "sum", self.c0 + other.c0, self.c1 + other.c1, self.c2 + other.c2)


def direct_sum(tables, prefixes) -> BracketTable:
    """Block-diagonal union; generator names become (prefix, name)."""
    names = [(p, g) for t, p in zip(tables, prefixes) for g in t.generators]
    out = BracketTable.empty(names, "sum")
    off = 0
    for t in tables:
        s = slice(off, off + t.size)
        out.c0[s, s] = t.c0
        out.c1[s, s, s] = t.c1
        out.c2[s, s, s, s] = t.c2
        off += t.size
    return out


def jacobi_residual(table: BracketTable, state) -> float:
    """max |cyclic sum {x_i,{x_j,x_k}}| relative to the size of the individual terms."""
    P = table.tensor(state)
    D = table.tensor_gradient(state)
    terms = [np.einsum("il,ljk->ijk", P, D), np.einsum("jl,lki->ijk", P, D), np.einsum("kl,lij->ijk", P, D)]
    scale = np.einsum("il,ljk->ijk", np.abs(P), np.abs(D))
    total = np.abs(terms[0] + terms[1] + terms[2]).max()
    return float(total / max(1.0, scale.max()))


# ---------------------------------------------------------------------------
# polynomial observables


class Observable:
    """Polynomial in the generators: {(name, name, ...): coefficient}."""

    def __init__(self, terms: dict):
        self.terms = {tuple(k) if isinstance(k, (tuple, list)) else (k,): complex(v) for k, v in terms.items()}

    def _resolve(self, table: BracketTable):
        return [([table.index(g) for g in mono], c) for mono, c in self.terms.items()]

    def value(self, table: BracketTable, state) -> complex:
        x = np.asarray(state, dtype=complex)
        return sum(c * np.prod([x[i] for i in idx]) for idx, c in self._resolve(table))

    def gradient(self, table: BracketTable, state) -> np.ndarray:
        x = np.asarray(state, dtype=complex)
        g = np.zeros(table.size, dtype=complex)
        for idx, c in self._resolve(table):
            for p in range(len(idx)):
                rest = idx[:p] + idx[p + 1:]
                g[idx[p]] += c * np.prod([x[i] for i in rest])
        return g


def generator(name) -> Observable:
    return Observable({(name,): 1.0})


def bracket_of_functions(table: BracketTable, F: Observable, G: Observable, state) -> complex:
    """{F, G} = sum_ij dF/dx_i {x_i, x_j} dG/dx_j."""
    return complex(F.gradient(table, state) @ table.tensor(state) @ G.gradient(table, state))


# ---------------------------------------------------------------------------
# tables


def structure_constants(alpha, beta, N: int) -> float:
    return structure_constant(alpha, beta, N)


def linear_slN(N: int) -> BracketTable:
    """{S_a, S_b} = C(a, b) S_(a+b) on reduced coefficients (raw a + b carries its sign)."""
    idx = basis_indices(N)
    pos = {a: k for k, a in enumerate(idx)}
    t = BracketTable.empty([("S", a) for a in idx], "linear_slN", N=N)
    for i, a in enumerate(idx):
        for j in range(i + 1, len(idx)):
            b = idx[j]
            s = (a[0] + b[0], a[1] + b[1])
            if is_zero_index(s, N):
                continue
            c = structure_constant(a, b, N) * reduction_sign(*s, N)
            if c:
                t._add(i, j, lin={pos[(s[0] % N, s[1] % N)]: c})
    return t


def _eps_pairs():
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            if a < b:
                yield a, b, 6 - a - b, levi_civita(a, b, 6 - a - b)


def linear_sl2() -> BracketTable:
    """{S_a, S_b} = 2i eps_abc S_c on (S1, S2, S3)."""
    t = BracketTable.empty(["S1", "S2", "S3"], "linear_sl2")
    for a, b, c, s in _eps_pairs():
        t._add(a - 1, b - 1, lin={c - 1: 2j * s})
    return t


def sklyanin_sl2(m: ModularPoint, nu_prime=(0, 0, 0), scale=1.0, kind: str = "sklyanin_sl2") -> BracketTable:
    """Quadratic bracket on (S0, S1, S2, S3) with a linear magnetic term.

    {S_a, S_b} = 2i eps S0 S_c and
    {S0, S_a} = 2i eps_abc S_b S_c (e_b - e_c) + 2i eps_abc S_b nu'_c, e = E2(omega).
    """
    npr = np.asarray(nu_prime, dtype=complex)
    e2 = [None] + [E2(sl2_omega(a, m), m) for a in (1, 2, 3)]
    t = BracketTable.empty(["S0", "S1", "S2", "S3"], kind, scale=scale)
    for a, b, c, s in _eps_pairs():
        t._add(a, b, quad={(0, c): 2j * s * scale})
    for a in (1, 2, 3):
        b, c = a % 3 + 1, (a % 3 + 1) % 3 + 1
        t._add(0, a, quad={(b, c): 2j * (e2[b] - e2[c]) * scale},
               lin={b: 2j * npr[c - 1] * scale, c: -2j * npr[b - 1] * scale})
    return t


def boundary_table(m: ModularPoint, nu_tilde) -> BracketTable:
    """Boundary site of the reflection chain: twice the magnetic quadratic bracket."""
    return sklyanin_sl2(m, nu_prime_from_tilde(nu_tilde, m), scale=2.0, kind="boundary")


def site_table(m: ModularPoint) -> BracketTable:
    return sklyanin_sl2(m, (0, 0, 0), scale=1.0, kind="site")


def _e1_raw(v, m: ModularPoint, N: int) -> complex:
    return E1((v[0] + v[1] * m.tau) / N, m)


def sfo_slN(N: int, m: ModularPoint, variant: str = "exchange") -> BracketTable:
    """Quadratic SFO bracket on (S0, S_a).

    ``exchange`` is the bracket generated by {L1, L2} = [r, L1 L2] for
    ``L = -S0 Id + sum S_a varphi_a T_a``.  ``symmetric`` is the alternative form
    with the symmetric reading of the E2 argument (kept for comparison).
    """
    idx = basis_indices(N)
    pos = {a: k + 1 for k, a in enumerate(idx)}
    t = BracketTable.empty(["S0"] + [("S", a) for a in idx], "SFO_slN", N=N, variant=variant)

    def red(v):
        return None if is_zero_index(v, N) else (reduction_sign(v[0], v[1], N), pos[(v[0] % N, v[1] % N)])

    e2 = {g: E2(LatticeIndex(*g, N).point(m), m) for g in idx}
    e2r = lambda v: e2[(v[0] % N, v[1] % N)]
    if variant == "exchange":
        k0, k1, ks = N * N / (8 * math.pi ** 2), 1j * N / (2 * math.pi), -1.0
    elif variant == "symmetric":
        k0, k1, ks = 1.0, 1.0, 1.0
    else:
        raise DomainError(f"unknown SFO variant {variant!r}")
    for a in idx:
        quad = {}
        for g in idx:
            d = (a[0] - g[0], a[1] - g[1])
            rd = red(d)
            if rd is None:
                continue
            c = structure_constant(a, g, N)
            if c == 0:
                continue
            key = (rd[1], pos[g])
            quad[key] = quad.get(key, 0) + k0 * rd[0] * (e2[g] - e2r(d)) * c
        # stored as {S0, S_a} = -{S_a, S0}
        t._add(0, pos[a], quad={k: -v for k, v in quad.items()})
    for i, a in enumerate(idx):
        for b in idx[i + 1:]:
            lin, quad = {}, {}
            s = red((a[0] + b[0], a[1] + b[1]))
            if s is not None:
                quad[(0, s[1])] = ks * s[0] * structure_constant(a, b, N)
            amb = (a[0] - b[0], a[1] - b[1])
            for g in idx:
                x = red((a[0] - g[0], a[1] - g[1]))
                bg = (b[0] + g[0], b[1] + g[1])
                y = red(bg)
                if x is None or y is None:
                    continue
                c = structure_constant(g, amb, N)
                if c == 0:
                    continue
                if variant == "exchange":
                    f = _e1_raw(g, m, N) - _e1_raw(bg, m, N)
                else:
                    bga = (bg[0] - a[0], bg[1] - a[1])
                    f = (_e1_raw(g, m, N) - _e1_raw(bg, m, N) + _e1_raw((a[0] - g[0], a[1] - g[1]), m, N)
                         + (0 if is_zero_index(bga, N) else _e1_raw(bga, m, N)))
                key = (x[1], y[1])
                quad[key] = quad.get(key, 0) + k1 * x[0] * y[0] * f * c
            t._add(pos[a], pos[b], lin=lin, quad=quad)
    return t


# ---------------------------------------------------------------------------
# Casimirs


def casimir_c1() -> Observable:
    return Observable({("S1", "S1"): 1, ("S2", "S2"): 1, ("S3", "S3"): 1})


def casimir_c2(m: ModularPoint, nu_prime, convention: str = "wp", linear: float = -2.0) -> Observable:
    """S0^2 + sum (e_a S_a^2 + linear nu'_a S_a), e_a = wp(omega_a) or E2(omega_a).

    With nu' from ``nu_prime_from_tilde`` the Casimir (and the constant term of
    det L~) needs ``linear = -2``; ``linear = +2`` is kept for comparison.
    """
    terms = {("S0", "S0"): 1.0}
    for a in (1, 2, 3):
        w = sl2_omega(a, m)
        ea = weierstrass_p(w, m) if convention == "wp" else E2(w, m)
        terms[(f"S{a}", f"S{a}")] = ea
        terms[(f"S{a}",)] = linear * nu_prime[a - 1]
    return Observable(terms)


def casimir_residual(table: BracketTable, C: Observable, state) -> float:
    """max_b |{C, x_b}| relative to the gradient scale."""
    grad = C.gradient(table, state)
    P = table.tensor(state)
    return float(np.abs(grad @ P).max() / max(1.0, (np.abs(grad) @ np.abs(P)).max()))


# ---------------------------------------------------------------------------
# Lax matrices and r-matrices


def sl2_group_lax(S, nu_tilde, z, m: ModularPoint, with_S0: bool = True) -> np.ndarray:
    """L~(z) = S0 + sum (S_a varphi_a(z) + nu~_a varphi_a(z - omega_a)) sigma_a; S = (S0, S1, S2, S3)."""
    out = S[0] * PAULI[0] if with_S0 else np.zeros((2, 2), complex)
    for a in (1, 2, 3):
        out = out + (S[a] * varphi_sl2(a, z, m) + nu_tilde[a - 1] * varphi_sl2(a, z - sl2_omega(a, m), m)) * PAULI[a]
    return out


def sl2_group_lax_gradient(z, m: ModularPoint, with_S0: bool = True):
    """dL~/dS for (S0, S1, S2, S3) (or (S1, S2, S3) without S0); L~ is linear in S."""
    grads = [varphi_sl2(a, z, m) * PAULI[a] for a in (1, 2, 3)]
    return ([PAULI[0]] if with_S0 else []) + grads


def r_matrix(z, w, m: ModularPoint, N: int) -> np.ndarray:
    """r(z - w) = sum_g varphi_g(z - w) T_g (x) T_(-g)."""
    x = z - w
    m.check_regular(x, "z - w")
    out = np.zeros((N * N, N * N), complex)
    for g in basis_indices(N):
        out += varphi_gamma(LatticeIndex(*g, N), x, m) * np.kron(t_matrix(*g, N), t_matrix(-g[0], -g[1], N))
    return out


def r_pm(z, w, m: ModularPoint):
    """(r+, r-) with r+- = sum_a varphi_a(z +- w) sigma_a (x) sigma_a."""
    rp = sum(varphi_sl2(a, z + w, m) * np.kron(PAULI[a], PAULI[a]) for a in (1, 2, 3))
    rm = sum(varphi_sl2(a, z - w, m) * np.kron(PAULI[a], PAULI[a]) for a in (1, 2, 3))
    return rp, rm


def _comm(A, B):
    return A @ B - B @ A


def cybe_residual(z1, z2, z3, m: ModularPoint, N: int) -> float:
    """||[r12, r13] + [r12, r23] + [r13, r23]|| with r_ij = r(z_i - z_j), relative to |r|^2."""
    I = np.eye(N)
    r12 = np.kron(r_matrix(z1, z2, m, N), I)
    r23 = np.kron(I, r_matrix(z2, z3, m, N))
    r13 = np.zeros((N ** 3, N ** 3), complex)
    for g in basis_indices(N):
        r13 += varphi_gamma(LatticeIndex(*g, N), z1 - z3, m) * np.kron(np.kron(t_matrix(*g, N), I), t_matrix(-g[0], -g[1], N))
    cy = _comm(r12, r13) + _comm(r12, r23) + _comm(r13, r23)
    scale = max(np.abs(r12).max(), np.abs(r13).max(), np.abs(r23).max()) ** 2
    return float(np.abs(cy).max() / scale)


def r_matrix_pole_residual(w, m: ModularPoint, N: int, eps: float = 1e-6) -> float:
    """|| lim (z - w) r - P || with P = sum_g T_g (x) T_-g; the O(eps) term cancels in the symmetric average."""
    P = sum(np.kron(t_matrix(*g, N), t_matrix(-g[0], -g[1], N)) for g in basis_indices(N))
    lim = 0.5 * eps * (r_matrix(w + eps, w, m, N) - r_matrix(w - eps, w, m, N))
    return float(np.abs(lim - P).max() / np.abs(P).max())


def _pair_tensor(table: BracketTable, state, dz, dw) -> np.ndarray:
    """sum_ij {x_i, x_j} dL/dx_i(z) (x) dL/dx_j(w)."""
    P = table.tensor(state)
    n = len(dz)
    out = 0
    for i in range(n):
        Ai = sum(P[i, j] * dw[j] for j in range(n))
        out = out + np.kron(dz[i], Ai)
    return out


def _relative(lhs, rhs) -> float:
    return float(np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max()))


def linear_rmatrix_check(S, z, w, m: ModularPoint, N: int) -> float:
    """{L1(z), L2(w)}_1 against [r(z - w), L1(z) + L2(w)] for L = sum S_a varphi_a T_a."""
    basis = SlnBasis(N)
    table = linear_slN(N)
    dz = [varphi_gamma(LatticeIndex(*a, N), z, m) * T for a, T in zip(basis.indices, basis.matrices)]
    dw = [varphi_gamma(LatticeIndex(*a, N), w, m) * T for a, T in zip(basis.indices, basis.matrices)]
    S = np.asarray(S, dtype=complex)
    Lz = sum(s * d for s, d in zip(S, dz))
    Lw = sum(s * d for s, d in zip(S, dw))
    I = np.eye(N)
    rhs = _comm(r_matrix(z, w, m, N), np.kron(Lz, I) + np.kron(I, Lw))
    return _relative(_pair_tensor(table, S, dz, dw), rhs)


def quadratic_exchange_check(state, z, w, m: ModularPoint, N: int, variant: str = "exchange") -> float:
    """{L~1(z), L~2(w)}_2 against [r(z - w), L~1 L~2] for L~ = -S0 + sum S_a varphi_a T_a."""
    basis = SlnBasis(N)
    table = sfo_slN(N, m, variant)
    I = np.eye(N)
    dz = [-I] + [varphi_gamma(LatticeIndex(*a, N), z, m) * T for a, T in zip(basis.indices, basis.matrices)]
    dw = [-I] + [varphi_gamma(LatticeIndex(*a, N), w, m) * T for a, T in zip(basis.indices, basis.matrices)]
    x = np.asarray(state, dtype=complex)
    Lz = sum(s * d for s, d in zip(x, dz))
    Lw = sum(s * d for s, d in zip(x, dw))
    X = np.kron(Lz, I) @ np.kron(I, Lw)
    rhs = _comm(r_matrix(z, w, m, N), X)
    return _relative(_pair_tensor(table, x, dz, dw), rhs)


# sigma_a = c_a T_(index a); for N = 2 the T coefficients are S^T = c S^sigma and S0^T = -S0
_SL2_T = {1: ((0, 1), 1j * math.pi), 2: ((1, 1), 1j * math.pi), 3: ((1, 0), -1j * math.pi)}


def sfo_sl2_crosscheck(state, m: ModularPoint) -> float:
    """Compare the N = 2 SFO table with the magnetic-free quadratic sl2 table.

    ``state`` is (S0, S1, S2, S3) in sigma coordinates.  The exchange algebra with
    r = -(1/pi^2) sum varphi_a sigma (x) sigma equals the quadratic sl2 table times
    a fixed factor; the factor is fitted on the first bracket and the worst
    deviation of all others is returned.
    """
    x = np.asarray(state, dtype=complex)
    idx = basis_indices(2)
    c = {a: _SL2_T[a][1] for a in (1, 2, 3)}
    posT = {_SL2_T[a][0]: a for a in (1, 2, 3)}
    xt = np.zeros(4, complex)
    xt[0] = -x[0]
    for k, g in enumerate(idx):
        xt[k + 1] = c[posT[g]] * x[posT[g]]
    PT = sfo_slN(2, m).tensor(xt)
    # Jacobian of (S0^T, S^T) w.r.t. (S0, S): diagonal
    jac = np.zeros(4, complex)
    jac[0] = -1
    sig_of = [0] + [posT[g] for g in idx]
    for k in range(1, 4):
        jac[k] = c[sig_of[k]]
    Psig = np.zeros((4, 4), complex)
    for i in range(4):
        for j in range(4):
            Psig[sig_of[i], sig_of[j]] = PT[i, j] / (jac[i] * jac[j])
    Pq = sklyanin_sl2(m).tensor(x)
    mask = np.abs(Pq) > 1e-12 * np.abs(Pq).max()
    ratio = Psig[mask] / Pq[mask]
    factor = ratio[0]
    return float(np.abs(Psig - factor * Pq).max() / np.abs(factor * Pq).max())


def reflection_bracket_check(S, nu_tilde, z, w, m: ModularPoint) -> dict:
    """Residuals of the quadratic and linear classical reflection brackets.

    quadratic: {L~1, L~2}_2 = 1/2 [L~1 L~2, r-] + 1/2 L~2 r+ L~1 - 1/2 L~1 r+ L~2 with the
    magnetic quadratic table; linear: {L1, L2}_1 = -1/2 [r-, L1 + L2] + 1/2 [r+, L1 - L2]
    with the linear sl2 table and L without S0.  ``S`` is (S0, S1, S2, S3).
    """
    S = np.asarray(S, dtype=complex)
    nt = np.asarray(nu_tilde, dtype=complex)
    I = np.eye(2)
    rp, rm = r_pm(z, w, m)
    L1 = np.kron(sl2_group_lax(S, nt, z, m), I)
    L2 = np.kron(I, sl2_group_lax(S, nt, w, m))
    X = L1 @ L2
    rhs2 = 0.5 * _comm(X, rm) + 0.5 * L2 @ rp @ L1 - 0.5 * L1 @ rp @ L2
    t2 = sklyanin_sl2(m, nu_prime_from_tilde(nt, m))
    lhs2 = _pair_tensor(t2, S, sl2_group_lax_gradient(z, m), sl2_group_lax_gradient(w, m))
    l1 = np.kron(sl2_group_lax(S, nt, z, m, with_S0=False), I)
    l2 = np.kron(I, sl2_group_lax(S, nt, w, m, with_S0=False))
    rhs1 = -0.5 * _comm(rm, l1 + l2) + 0.5 * _comm(rp, l1 - l2)
    lhs1 = _pair_tensor(linear_sl2(), S[1:], sl2_group_lax_gradient(z, m, False), sl2_group_lax_gradient(w, m, False))
    return {"quadratic": _relative(lhs2, rhs2), "linear": _relative(lhs1, rhs1)}


def unreduced_reflection_check(S, nu_tilde, z, w, m: ModularPoint) -> dict:
    """Best-fit residual of the unreduced forms {L~1, L~2}_2 = [L~1 L~2, r-] and {L1, L2}_1 = [L1 + L2, r-].

    The generator brackets are fitted by least squares over several point pairs;
    a large residual means no bracket on (S0, S) reproduces the form.
    """
    S = np.asarray(S, dtype=complex)
    nt = np.asarray(nu_tilde, dtype=complex)
    I = np.eye(2)
    pts = [(z, w), (z + 0.11 - 0.05j, w - 0.07 + 0.03j), (z - 0.13 + 0.02j, w + 0.09 + 0.06j), (0.5 * z + 0.1j, 0.5 * w - 0.1)]
    out = {}
    for label, with_S0, x in (("quadratic", True, S), ("linear", False, S[1:])):
        cols, rhs = [], []
        n = len(x)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for zz, ww in pts:
            gz = sl2_group_lax_gradient(zz, m, with_S0)
            gw = sl2_group_lax_gradient(ww, m, with_S0)
            cols.append(np.stack([(np.kron(gz[i], gw[j]) - np.kron(gz[j], gw[i])).ravel() for i, j in pairs], 1))
            _, rm = r_pm(zz, ww, m)
            L1 = np.kron(sl2_group_lax(S, nt, zz, m, with_S0), I)
            L2 = np.kron(I, sl2_group_lax(S, nt, ww, m, with_S0))
            rhs.append((_comm(L1 @ L2, rm) if with_S0 else _comm(L1 + L2, rm)).ravel())
        A, b = np.vstack(cols), np.concatenate(rhs)
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        out[label] = float(np.abs(A @ sol - b).max() / max(1.0, np.abs(b).max()))
    return out


def bihamiltonian_check(S, nu_tilde, m: ModularPoint, lambdas=(0.5, 1.0, 2.0)) -> dict:
    """{S0, S_a}_2 against the Lax-frame gyrostat field -2i S x (J S - nu'), and pencil Jacobi.

    The pencil is {,}_2 + lambda {,}_1 with the linear sl2 bracket extended by a central S0.
    """
    from .flows import gyro_inertia, gyro_rhs

    S = np.asarray(S, dtype=complex)
    npr = nu_prime_from_tilde(nu_tilde, m)
    t2 = sklyanin_sl2(m, npr)
    P = t2.tensor(S)
    field_ = gyro_rhs(S[1:], npr, gyro_inertia(m))
    motion = float(np.abs(P[0, 1:] - field_).max() / max(1.0, np.abs(field_).max()))
    lin = BracketTable.empty(t2.generators, "linear_sl2")
    for a, b, c, s in _eps_pairs():
        lin._add(a, b, lin={c: 2j * s})
    pencil = max(jacobi_residual(t2 + lin.scaled(lam), S) for lam in lambdas)
    return {"equation_of_motion": motion, "pencil_jacobi": pencil}


def determinant_expansion(S, nu_tilde, m: ModularPoint, samples=None) -> dict:
    """Fit det L~(z) on {1, wp(z), wp(z - omega_a), E1(z) - E1(z - omega_a)}.

    Returns the fitted coefficients, the fit residual and the comparison of the
    constant and wp(z) coefficients with c2 and -c1 (S-independent parts removed
    by subtracting the S = 0 fit).
    """
    S = np.asarray(S, dtype=complex)
    nt = np.asarray(nu_tilde, dtype=complex)
    if samples is None:
        samples = [0.13 + 0.21j, -0.27 + 0.11j, 0.31 + 0.37j, 0.07 - 0.29j, 0.41 + 0.05j,
                   -0.19 - 0.17j, 0.23 + 0.61j, -0.37 + 0.43j, 0.17 + 0.09j, 0.29 - 0.13j]

    def basis_row(z):
        row = [1.0, weierstrass_p(z, m)]
        row += [weierstrass_p(z - sl2_omega(a, m), m) for a in (1, 2, 3)]
        row += [E1(z, m) - E1(z - sl2_omega(a, m), m) for a in (1, 2, 3)]
        return row

    A = np.array([basis_row(z) for z in samples], dtype=complex)

    def fit(x):
        b = np.array([np.linalg.det(sl2_group_lax(x, nt, z, m)) for z in samples])
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        return sol, float(np.abs(A @ sol - b).max() / max(1.0, np.abs(b).max()))

    sol, res = fit(S)
    sol0, _ = fit(np.zeros(4, complex))
    diff = sol - sol0
    npr = nu_prime_from_tilde(nt, m)
    table = sklyanin_sl2(m, npr)
    c1 = casimir_c1().value(table, S)
    c2 = casimir_c2(m, npr).value(table, S)
    return {
        "coefficients": sol,
        "fit_residual": res,
        "c2_residual": float(abs(diff[0] - c2) / max(1.0, abs(c2))),
        "c1_residual": float(abs(diff[1] + c1) / max(1.0, abs(c1))),
    }
