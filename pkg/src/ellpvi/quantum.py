"""Quantum reflection algebra: R-matrices, the quantum Lax operator and ideal membership.

Noncommutative polynomials in S0..S3 are dictionaries from words (tuples of
generator indices) to complex coefficients.  The nu~ constants are bound as
scalars, which is harmless because they are central.  Membership in the
two-sided ideal generated by the six quadratic relations is decided by least
squares against the ideal span truncated at the relevant degree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import PAULI, cyclic
from .elliptic import E1, ModularPoint, phi, sl2_omega, varphi_sl2_eta
from .flows import nu_prime_from_tilde
from .identities import reflection_K, reflection_rho, relative_residual
from .lax import ConditioningError
from .poisson import r_pm, sklyanin_sl2

MAX_DEGREE = 3
GENERATORS = (0, 1, 2, 3)


class NCPoly:
    """Noncommutative polynomial of degree at most three in S0, S1, S2, S3."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[tuple, complex] = {}
        for k, v in (terms or {}).items():
            k = tuple(k)
            if len(k) > MAX_DEGREE:
                raise ValueError(f"word {k} exceeds degree {MAX_DEGREE}")
            if v != 0:
                self.terms[k] = self.terms.get(k, 0) + complex(v)

    @classmethod
    def const(cls, c) -> "NCPoly":
        return cls({(): c})

    @classmethod
    def gen(cls, a: int) -> "NCPoly":
        return cls({(a,): 1.0})

    @property
    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def __add__(self, other: "NCPoly") -> "NCPoly":
        out = NCPoly(self.terms)
        for k, v in other.terms.items():
            out.terms[k] = out.terms.get(k, 0) + v
        return out

    def __neg__(self) -> "NCPoly":
        return NCPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "NCPoly") -> "NCPoly":
        return self + (-other)

    def scale(self, c) -> "NCPoly":
        return NCPoly({k: c * v for k, v in self.terms.items()})

    def __rmul__(self, c) -> "NCPoly":
        return self.scale(c)

    def mul(self, other: "NCPoly", truncate: bool = False) -> "NCPoly":
        out: dict = {}
        for a, x in self.terms.items():
            for b, y in other.terms.items():
                w = a + b
                if len(w) > MAX_DEGREE:
                    if truncate:
                        continue
                    raise ValueError("product exceeds degree 3; pass truncate=True to drop it")
                out[w] = out.get(w, 0) + x * y
        return NCPoly(out)

    def __matmul__(self, other: "NCPoly") -> "NCPoly":
        return self.mul(other)

    def commutator(self, other: "NCPoly") -> "NCPoly":
        return self @ other - other @ self

    def anticommutator(self, other: "NCPoly") -> "NCPoly":
        return self @ other + other @ self

    def words(self):
        return sorted(self.terms, key=lambda w: (len(w), w))

    def max_abs(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def __repr__(self) -> str:
        return " + ".join(f"({self.terms[w]:.6g}){''.join(f'S{i}' for i in w) or '1'}" for w in self.words()) or "0"


S = [NCPoly.gen(a) for a in GENERATORS]


@dataclass
class RelationSet:
    """The six quadratic relations of the deformed Sklyanin algebra.

    ``variant="standard"`` uses +2i/K_g (nu~_a rho_a S_b - nu~_b rho_b S_a) in the
    [S_g, S0] relation, the form under which the reflection equation holds;
    ``"flipped"`` keeps the opposite sign.  ``k_scale`` multiplies every K
    (mutation control).
    """

    hbar: complex
    nu_tilde: np.ndarray
    m: ModularPoint
    variant: str = "standard"
    k_scale: complex = 1.0

    def __post_init__(self):
        self.nu_tilde = np.asarray(self.nu_tilde, dtype=complex)
        if self.variant not in ("standard", "flipped"):
            raise ValueError(f"unknown relation variant {self.variant!r}")
        self.K = [None] + [self.k_scale * reflection_K(a, self.hbar, self.m) for a in (1, 2, 3)]
        self.rho = [None] + [reflection_rho(a, self.hbar, self.m) for a in (1, 2, 3)]
        sgn = 1.0 if self.variant == "standard" else -1.0
        rels = []
        for al in (1, 2, 3):
            be, ga = cyclic(al)
            # i [S0, S_a]_+ - [S_b, S_g]
            rels.append(1j * S[0].anticommutator(S[al]) - S[be].commutator(S[ga]))
        for al in (1, 2, 3):
            be, ga = cyclic(al)
            c = (self.K[be] - self.K[al]) / self.K[ga]
            lin = (self.nu_tilde[al - 1] * self.rho[al]) * S[be] - (self.nu_tilde[be - 1] * self.rho[be]) * S[al]
            rels.append(S[ga].commutator(S[0]) - (1j * c) * S[al].anticommutator(S[be])
                        - (sgn * 2j / self.K[ga]) * lin)
        self.relations = rels
        self._check_rank()

    def _check_rank(self):
        A, _ = _matrix(self.relations)
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] < 1e-10 * s[0]:
            raise ConditioningError(f"relation span is rank deficient (smallest singular value {s[-1]:.3g})")

    def span(self, degree: int) -> list:
        """Generators of the ideal up to the given degree."""
        out = list(self.relations)
        if degree >= 3:
            out += [S[g] @ r for r in self.relations for g in GENERATORS]
            out += [r @ S[g] for r in self.relations for g in GENERATORS]
        return out

    def casimirs(self, linear: float = -2.0):
        """C1 = S0^2 + sum S_a^2 and C2 = sum K_a (K_a - K_b - K_g) S_a^2 + linear nu~_a rho_a K_a S_a.

        The standard relations need ``linear = -2``.
        """
        C1 = S[0] @ S[0]
        C2 = NCPoly()
        for al in (1, 2, 3):
            be, ga = cyclic(al)
            K = self.K
            C1 = C1 + S[al] @ S[al]
            C2 = C2 + (K[al] * (K[al] - K[be] - K[ga])) * (S[al] @ S[al])
            C2 = C2 + (linear * self.nu_tilde[al - 1] * self.rho[al] * K[al]) * S[al]
        return C1, C2


def _matrix(polys, words=None):
    if words is None:
        words = sorted({w for p in polys for w in p.terms}, key=lambda w: (len(w), w))
    index = {w: i for i, w in enumerate(words)}
    A = np.zeros((len(words), len(polys)), dtype=complex)
    for j, p in enumerate(polys):
        for w, v in p.terms.items():
            A[index[w], j] = v
    return A, words


def membership_residual(polys, span) -> float:
    """max over ``polys`` of the least-squares distance to span(span), relative to the largest coefficient."""
    polys = list(polys)
    words = sorted({w for p in polys + list(span) for w in p.terms}, key=lambda w: (len(w), w))
    A, _ = _matrix(span, words)
    B, _ = _matrix(polys, words)
    scale = max(1e-300, np.abs(B).max())
    X, *_ = np.linalg.lstsq(A, B, rcond=1e-10)
    return float(np.abs(A @ X - B).max() / scale)


# ---------------------------------------------------------------------------
# operator-valued matrices


class OperatorMatrix:
    """sum_word word * M_word with numeric matrices M_word."""

    def __init__(self, terms: dict):
        self.terms = {tuple(k): np.asarray(v, dtype=complex) for k, v in terms.items()}

    @classmethod
    def scalar(cls, M) -> "OperatorMatrix":
        return cls({(): M})

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        out: dict = {}
        for a, A in self.terms.items():
            for b, B in other.terms.items():
                w = a + b
                out[w] = out.get(w, 0) + A @ B
        return OperatorMatrix(out)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) - v
        return OperatorMatrix(out)

    def embed(self, slot: int) -> "OperatorMatrix":
        I = np.eye(2)
        return OperatorMatrix({k: (np.kron(v, I) if slot == 1 else np.kron(I, v)) for k, v in self.terms.items()})

    def evaluate(self, values) -> np.ndarray:
        """Substitute commuting numbers for the generators (classical evaluation)."""
        return sum(np.prod([values[i] for i in w]) * M for w, M in self.terms.items())

    def entries(self) -> list:
        shape = next(iter(self.terms.values())).shape
        return [NCPoly({w: M[i, j] for w, M in self.terms.items()}) for i in range(shape[0]) for j in range(shape[1])]


def R_pm(sign: int, z, w, hbar, m: ModularPoint) -> np.ndarray:
    """R(z +- w) = sum_{a=0..3} varphi^(hbar/2)_a(z +- w) sigma_a (x) sigma_a."""
    x = z + sign * w
    return sum(varphi_sl2_eta(a, hbar / 2, x, m) * np.kron(PAULI[a], PAULI[a]) for a in range(4))


def quantum_lax(hbar, nu_tilde, z, m: ModularPoint, companion: bool = False) -> OperatorMatrix:
    """L(z) = S0 phi(hbar, z) + sum (S_a varphi^hbar_a(z) + nu~_a varphi^hbar_a(z - omega_a)) sigma_a.

    ``companion=True`` flips the sign of the sigma_a part.
    """
    nt = np.asarray(nu_tilde, dtype=complex)
    s = -1.0 if companion else 1.0
    terms = {(0,): phi(hbar, z, m) * PAULI[0], (): np.zeros((2, 2), complex)}
    for a in (1, 2, 3):
        terms[(a,)] = s * varphi_sl2_eta(a, hbar, z, m) * PAULI[a]
        terms[()] = terms[()] + s * nt[a - 1] * varphi_sl2_eta(a, hbar, z - sl2_omega(a, m), m) * PAULI[a]
    return OperatorMatrix(terms)


def reflection_polynomials(z, w, hbar, nu_tilde, m: ModularPoint) -> list:
    """Entries of R-(z,w) L1(z) R+(z,w) L2(w) - L2(w) R+(z,w) L1(z) R-(z,w)."""
    Rm = OperatorMatrix.scalar(R_pm(-1, z, w, hbar, m))
    Rp = OperatorMatrix.scalar(R_pm(+1, z, w, hbar, m))
    L1 = quantum_lax(hbar, nu_tilde, z, m).embed(1)
    L2 = quantum_lax(hbar, nu_tilde, w, m).embed(2)
    return (Rm @ L1 @ Rp @ L2 - L2 @ Rp @ L1 @ Rm).entries()


def reflection_residual(z, w, hbar, nu_tilde, m: ModularPoint, relations: RelationSet | None = None) -> float:
    """Largest distance of a reflection-equation entry from the span of the relations."""
    rels = relations or RelationSet(hbar, nu_tilde, m)
    return membership_residual(reflection_polynomials(z, w, hbar, nu_tilde, m), rels.span(2))


def boundary_channel_identities(z, w, hbar, m: ModularPoint) -> dict:
    """The three scalar identities behind the 1 (x) sigma channel of the reflection equation."""
    return {name: relative_residual(name, (z, w, hbar), m) for name in ("w40", "w401", "w402")}


def central_check(hbar, nu_tilde, m: ModularPoint, variant: str = "standard", linear: float = -2.0) -> dict:
    """max_a distance of [C_i, S_a] from the degree-3 ideal span."""
    rels = RelationSet(hbar, nu_tilde, m, variant)
    span = rels.span(3)
    C1, C2 = rels.casimirs(linear)
    return {name: membership_residual([C.commutator(S[a]) for a in GENERATORS], span)
            for name, C in (("C1", C1), ("C2", C2))}


def _entry_trace(A: OperatorMatrix, B: OperatorMatrix) -> NCPoly:
    """tr P (A (x) B) = 2 tr(A B) for P = sigma0 (x) sigma0 + sum sigma_a (x) sigma_a."""
    out: dict = {}
    for a, X in A.terms.items():
        for b, Y in B.terms.items():
            out[a + b] = out.get(a + b, 0) + 2 * np.trace(X @ Y)
    return NCPoly(out)


@dataclass
class DeterminantReport:
    z: complex
    coefficients: np.ndarray  # on (1, C1, C2)
    residual: float


def quantum_determinant(z, hbar, nu_tilde, m: ModularPoint, form: str = "reflected",
                        relations: RelationSet | None = None) -> DeterminantReport:
    """Expand the quantum determinant on {1, C1, C2} modulo the relations.

    ``form="reflected"`` uses tr P (L(z, hbar) (x) L(-z, hbar)); ``"companion"``
    uses tr P (L(z, hbar) (x) L+(z, -hbar)) with the sign-flipped companion.
    """
    rels = relations or RelationSet(hbar, nu_tilde, m)
    A = quantum_lax(hbar, nu_tilde, z, m)
    if form == "reflected":
        B = quantum_lax(hbar, nu_tilde, -z, m)
    elif form == "companion":
        B = quantum_lax(-hbar, nu_tilde, z, m, companion=True)
    else:
        raise ValueError(f"unknown determinant form {form!r}")
    d = _entry_trace(A, B)
    C1, C2 = rels.casimirs()
    basis = [NCPoly.const(1.0), C1, C2]
    span = rels.span(2) + basis
    words = sorted({w for p in span + [d] for w in p.terms}, key=lambda w: (len(w), w))
    M, _ = _matrix(span, words)
    b, _ = _matrix([d], words)
    x, *_ = np.linalg.lstsq(M, b, rcond=1e-10)
    res = float(np.abs(M @ x - b).max() / max(1e-300, np.abs(b).max()))
    return DeterminantReport(z, x[-3:, 0], res)


# ---------------------------------------------------------------------------
# classical limits


def r_matrix_limit(z, w, hbar, m: ModularPoint, scalar_term: bool = True) -> float:
    """max || R+- - (hbar/2)^-1 sigma0 (x) sigma0 - r+- - E1(z +- w) sigma0 (x) sigma0 ||.

    The sigma0 channel phi(hbar/2, x) = 2/hbar + E1(x) + O(hbar) leaves the central
    term E1(z +- w) Id at order one; ``scalar_term=False`` omits it from the comparison.
    """
    rp, rm = r_pm(z, w, m)
    lead = (2 / hbar) * np.eye(4)
    extra = (lambda x: E1(x, m) * np.eye(4)) if scalar_term else (lambda x: 0)
    return float(max(np.abs(R_pm(+1, z, w, hbar, m) - lead - rp - extra(z + w)).max(),
                     np.abs(R_pm(-1, z, w, hbar, m) - lead - rm - extra(z - w)).max()))


def lax_limit(S_cl, nu_tilde, z, hbar, m: ModularPoint) -> float:
    """|| L(z) at (hbar S0, S) - (hbar^-1 hbar S0 + classical sigma part) || = O(hbar)."""
    from .poisson import sl2_group_lax

    S_cl = np.asarray(S_cl, dtype=complex)
    q = quantum_lax(hbar, nu_tilde, z, m).evaluate([hbar * S_cl[0], S_cl[1], S_cl[2], S_cl[3]])
    return float(np.abs(q - sl2_group_lax(S_cl, nu_tilde, z, m)).max())


def implied_brackets(hbar, nu_tilde, m: ModularPoint, variant: str = "standard") -> dict:
    """Classical brackets read off the relations with S0 -> hbar S0 and [ , ] -> hbar { , }.

    Returns {S0, S_g} as (quadratic coefficient of S_a S_b, linear coefficients of S_a, S_b).
    """
    rels = RelationSet(hbar, nu_tilde, m, variant)
    sgn = 1.0 if variant == "standard" else -1.0
    out = {}
    for al in (1, 2, 3):
        be, ga = cyclic(al)
        K, rho, nt = rels.K, rels.rho, rels.nu_tilde
        c = (K[be] - K[al]) / K[ga]
        # hbar^2 {S_g, S0} = 2 i c S_a S_b + sgn 2i/K_g (nu_a rho_a S_b - nu_b rho_b S_a)
        quad = -2j * c / hbar ** 2
        lin_b = -sgn * 2j / K[ga] * nt[al - 1] * rho[al] / hbar ** 2
        lin_a = sgn * 2j / K[ga] * nt[be - 1] * rho[be] / hbar ** 2
        out[ga] = (quad, lin_a, lin_b)
    return out


def classical_bracket_limit(nu_tilde, m: ModularPoint, hbars=(1e-3, 3e-4, 1e-4), variant: str = "standard") -> float:
    """Extrapolated relation coefficients against the magnetic quadratic table.

    Each coefficient is fitted by a polynomial in hbar through the sampled values
    (degree len(hbars) - 1) and evaluated at hbar = 0.
    """
    samples = [implied_brackets(h, nu_tilde, m, variant) for h in hbars]
    V = np.vander(np.asarray(hbars, dtype=float), len(hbars), increasing=True)
    table = sklyanin_sl2(m, nu_prime_from_tilde(nu_tilde, m))
    worst = 0.0
    for ga in (1, 2, 3):
        al, be = cyclic(ga)
        vals = np.array([s_[ga] for s_ in samples])
        ext = np.linalg.solve(V, vals)[0]
        want = (table.c2[0, ga, al, be] + table.c2[0, ga, be, al], table.c1[0, ga, al], table.c1[0, ga, be])
        scale = max(1.0, max(abs(v) for v in want))
        worst = max(worst, max(abs(e - v) for e, v in zip(ext, want)) / scale)
    return float(worst)
