"""Lax pairs on the elliptic curve and their consistency checks.

Isomonodromic conventions: a flow ``kappa d_tau X = F(X; tau)`` has connection
level ``k = kappa / (2 pi i)``.  The L-matrix acquires the scalar part
``-(k/N) E1(z) Id`` and the M-matrix is the autonomous one divided by ``2 pi i``
plus ``-(k/N) d_tau log theta(z) Id``.  The zero-curvature residual is then
``d_tau L - d_z M - (1/k) [L, M]``.  With ``kappa = 0`` the autonomous pair obeys
``dL/dt = [L, M]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .algebra import PAULI, SIGMA_FROM_T, SlnBasis, _q_lambda, cyclic
from .elliptic import (
    TWO_PI_I,
    DomainError,
    LatticeIndex,
    ModularPoint,
    _log_theta_derivs,
    e,
    e_N,
    phi_jet,
    sl2_domega,
    sl2_omega,
    varphi_sl2_jet,
)
from .flows import nu_prime_from_tilde

Matrix = np.ndarray


class DegenerateConfigurationError(ValueError):
    """Coordinates collide modulo the lattice, or marked points coincide."""


class ConditioningError(ArithmeticError):
    """A least-squares fit is too ill-conditioned to trust."""


class MisuseError(ValueError):
    """An autonomous object was passed where an isomonodromic one is required (or vice versa)."""


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class CMState:
    """Spin Calogero-Moser data: coordinates u, momenta v, spin matrix p."""

    u: np.ndarray
    v: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        v = np.asarray(self.v, dtype=complex)
        p = np.asarray(self.p, dtype=complex)
        N = len(u)
        if N < 2 or v.shape != (N,) or p.shape != (N, N):
            raise DomainError("CMState needs N >= 2, len(v) = N and an N x N spin matrix")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "p", p)

    @property
    def N(self) -> int:
        return len(self.u)

    @classmethod
    def spinless(cls, u, v, nu) -> "CMState":
        """Orbit with p_jk = nu for j != k and zero diagonal."""
        N = len(u)
        p = nu * (np.ones((N, N)) - np.eye(N))
        return cls(u, v, p)

    def constraint_residual(self) -> float:
        return max(abs(self.u.sum()), abs(self.v.sum()), float(np.abs(np.diag(self.p)).max()))


@dataclass(frozen=True)
class GyroState:
    """sl(2) spin in the Lax frame with sigma-labelled constants nu~_1..nu~_3.

    ``S0`` is only used by group-valued (quadratic bracket) contexts.
    """

    S: np.ndarray
    nu_tilde: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=complex))
    S0: Optional[complex] = None

    def __post_init__(self):
        S = np.asarray(self.S, dtype=complex)
        nt = np.asarray(self.nu_tilde, dtype=complex)
        if S.shape != (3,) or nt.shape != (3,):
            raise DomainError("GyroState needs three spin components and three nu~ constants")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "nu_tilde", nt)

    @property
    def casimir(self) -> complex:
        return complex(np.sum(self.S ** 2))

    def nu_prime(self, m: ModularPoint) -> np.ndarray:
        return nu_prime_from_tilde(self.nu_tilde, m)


# ---------------------------------------------------------------------------
# the field container


@dataclass(frozen=True)
class LaxField:
    """Matrix-valued function of the spectral parameter with its declared data.

    Multiplier law: ``L(z+1) = g1^-1 L(z) g1`` and
    ``L(z+tau) = gtau^-1 L(z) gtau + tau_shift``.
    """

    N: int
    m: ModularPoint
    value: Callable[[complex], Matrix]
    dz: Callable[[complex], Matrix]
    dtau: Optional[Callable[[complex], Matrix]] = None
    dstate: Optional[Callable[[complex, object], Matrix]] = None
    g1: Optional[Matrix] = None
    gtau: Optional[Matrix] = None
    tau_shift: Optional[Matrix] = None
    level: complex = 0j
    poles: tuple = ()
    residues: tuple = ()
    label: str = ""

    def __call__(self, z) -> Matrix:
        return self.value(z)

    def residue(self, pole, radius: float = 1e-2, n: int = 64) -> Matrix:
        """Contour average (1/2 pi i) ∮ L around ``pole`` (exponentially accurate)."""
        w = np.exp(2j * math.pi * np.arange(n) / n)
        return sum(self.value(pole + radius * x) * (radius * x) for x in w) / n


def _norm(A) -> float:
    return float(np.abs(A).max())


def _level(kappa) -> complex:
    return complex(kappa) / TWO_PI_I


def _m_scale(kappa) -> complex:
    return 1.0 if kappa == 0 else 1.0 / TWO_PI_I


# ---------------------------------------------------------------------------
# Calogero-Moser and the generic degree-zero Garnier-Gaudin matrix


def _check_distinct(points, m: ModularPoint, what: str):
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if m.distance_to_lattice(points[i] - points[j]) < m.pole_tol:
                raise DegenerateConfigurationError(f"{what} {i} and {j} coincide modulo the lattice")


def build_cm_lax(state: CMState, m: ModularPoint, kappa=0):
    """Spin CM pair: L = diag(v) + p_jk phi(u_j - u_k, z), M = p_jk f(u_j - u_k, z)."""
    N = state.N
    u, v, p = state.u, state.v, state.p
    _check_distinct(list(u), m, "particles")
    k = _level(kappa)
    c = _m_scale(kappa)
    I = np.eye(N, dtype=complex)

    def jets(z):
        J = {}
        for a in range(N):
            for b in range(N):
                if a != b:
                    J[a, b] = phi_jet(u[a] - u[b], z, m)
        return J

    def L(z):
        J = jets(z)
        out = np.diag(v).astype(complex)
        for (a, b), j in J.items():
            out[a, b] = p[a, b] * j.value
        return out + (-k / N * _log_theta_derivs(z, m)[0]) * I

    def Lz(z):
        J = jets(z)
        out = np.zeros((N, N), dtype=complex)
        for (a, b), j in J.items():
            out[a, b] = p[a, b] * j.z
        return out + (k / N * _log_theta_derivs(z, m)[1]) * I

    def Lt(z):
        J = jets(z)
        out = np.zeros((N, N), dtype=complex)
        for (a, b), j in J.items():
            out[a, b] = p[a, b] * j.tau
        return out + (-k / N * _log_theta_derivs(z, m)[4]) * I

    def dL(z, rate):
        du, dv, dp = rate
        J = jets(z)
        out = np.diag(np.asarray(dv, dtype=complex))
        for (a, b), j in J.items():
            out[a, b] = dp[a, b] * j.value + p[a, b] * j.u * (du[a] - du[b])
        return out

    def M(z):
        J = jets(z)
        out = np.zeros((N, N), dtype=complex)
        for (a, b), j in J.items():
            out[a, b] = c * p[a, b] * j.u
        return out + (-k / N * _log_theta_derivs(z, m)[3]) * I

    def Mz(z):
        J = jets(z)
        out = np.zeros((N, N), dtype=complex)
        for (a, b), j in J.items():
            out[a, b] = c * p[a, b] * j.uz
        return out + (-k / N * _log_theta_derivs(z, m)[4]) * I

    gt = np.diag([e(x) for x in u])
    Lf = LaxField(N, m, L, Lz, Lt, dL, I, gt, (TWO_PI_I * k / N) * I, k, (0j,), (p - k / N * I,), "CM")
    Mf = LaxField(N, m, M, Mz, level=k, label="CM-M")
    return Lf, Mf


def build_generic_egg(kind: str, N: int, marked_points: Sequence[complex], spins: Sequence,
                      m: ModularPoint, moduli=None, momenta=None) -> LaxField:
    """Elliptic Garnier-Gaudin Lax matrix with simple poles at ``marked_points``.

    ``deg0``: spins are N x N matrices p^a, ``moduli`` the vector u and ``momenta`` v;
    L_ij = delta_ij (v_i + sum_a p^a_ii E1(z - z_a)) + (1 - delta_ij) sum_a p^a_ij phi(u_i - u_j, z - z_a).
    ``deg1``: spins are coefficient vectors over the reduced T basis;
    L = sum_a sum_g S^a_g varphi_g(z - z_a) T_g.
    """
    pts = [complex(x) for x in marked_points]
    if len(pts) != len(spins):
        raise DomainError("one spin per marked point is required")
    _check_distinct(pts, m, "marked points")
    I = np.eye(N, dtype=complex)
    if kind == "deg0":
        u = np.asarray(moduli, dtype=complex)
        v = np.zeros(N, dtype=complex) if momenta is None else np.asarray(momenta, dtype=complex)
        ps = [np.asarray(s, dtype=complex) for s in spins]
        _check_distinct(list(u), m, "moduli")

        def L(z):
            out = np.diag(v).astype(complex)
            for za, pa in zip(pts, ps):
                w = z - za
                e1 = _log_theta_derivs(w, m)[0]
                for i in range(N):
                    out[i, i] += pa[i, i] * e1
                    for j in range(N):
                        if i != j:
                            out[i, j] += pa[i, j] * phi_jet(u[i] - u[j], w, m).value
            return out

        def Lz(z):
            out = np.zeros((N, N), dtype=complex)
            for za, pa in zip(pts, ps):
                w = z - za
                e2 = _log_theta_derivs(w, m)[1]
                for i in range(N):
                    out[i, i] -= pa[i, i] * e2
                    for j in range(N):
                        if i != j:
                            out[i, j] += pa[i, j] * phi_jet(u[i] - u[j], w, m).z
            return out

        shift = -TWO_PI_I * np.diag(sum(np.diag(pa) for pa in ps))
        gt = np.diag([e(x) for x in u])
        return LaxField(N, m, L, Lz, g1=I, gtau=gt, tau_shift=shift, poles=tuple(pts),
                        residues=tuple(ps), label="EGG-deg0")
    if kind == "deg1":
        basis = SlnBasis(N)
        Ss = [np.asarray(s, dtype=complex) for s in spins]
        Q, Lam = _q_lambda(N)

        def L(z):
            return sum(_top_sum(basis, S, z - za, m, "value") for za, S in zip(pts, Ss))

        def Lz(z):
            return sum(_top_sum(basis, S, z - za, m, "dz") for za, S in zip(pts, Ss))

        return LaxField(N, m, L, Lz, g1=Q, gtau=Lam, tau_shift=np.zeros((N, N), complex),
                        poles=tuple(pts), residues=tuple(basis.combine(S) for S in Ss), label="EGG-deg1")
    raise DomainError(f"unknown bundle kind {kind!r}; use 'deg0' or 'deg1'")


# ---------------------------------------------------------------------------
# elliptic top


def _varphi_gamma_jet(g, z, m, N):
    """varphi_g(z) for reduced g with (value, d_z, d_tau, f, d_z f)."""
    x = LatticeIndex(*g, N).point(m)
    j = phi_jet(x, z, m)
    pre = e_N(g[1] * z, N)
    c = TWO_PI_I * g[1] / N
    return (
        pre * j.value,
        pre * (j.z + c * j.value),
        pre * (j.tau + j.u * g[1] / N),
        pre * j.u,
        pre * (j.uz + c * j.u),
    )


_JET_SLOT = {"value": 0, "dz": 1, "dtau": 2, "f": 3, "fz": 4}


def _top_sum(basis: SlnBasis, S, z, m, which: str) -> Matrix:
    k = _JET_SLOT[which]
    out = np.zeros((basis.N, basis.N), dtype=complex)
    for s, g, T in zip(S, basis.indices, basis.matrices):
        if s != 0:
            out += s * _varphi_gamma_jet(g, z, m, basis.N)[k] * T
    return out


def build_top_lax(S, m: ModularPoint, kappa=0, N: Optional[int] = None):
    """Elliptic top on sl(N): L = -(k/N) E1 Id + sum S_g varphi_g(z) T_g, M = sum S_g f_g(z) T_g."""
    S = np.asarray(S, dtype=complex)
    if N is None:
        N = int(round(math.sqrt(len(S) + 1)))
    basis = SlnBasis(N)
    if len(S) != basis.dim:
        raise DomainError(f"expected {basis.dim} coefficients for sl({N})")
    k = _level(kappa)
    c = _m_scale(kappa)
    I = np.eye(N, dtype=complex)
    Q, Lam = _q_lambda(N)

    def L(z):
        return _top_sum(basis, S, z, m, "value") - k / N * _log_theta_derivs(z, m)[0] * I

    def Lz(z):
        return _top_sum(basis, S, z, m, "dz") + k / N * _log_theta_derivs(z, m)[1] * I

    def Lt(z):
        return _top_sum(basis, S, z, m, "dtau") - k / N * _log_theta_derivs(z, m)[4] * I

    def dL(z, rate):
        return _top_sum(basis, np.asarray(rate, dtype=complex), z, m, "value")

    def M(z):
        return c * _top_sum(basis, S, z, m, "f") - k / N * _log_theta_derivs(z, m)[3] * I

    def Mz(z):
        return c * _top_sum(basis, S, z, m, "fz") - k / N * _log_theta_derivs(z, m)[4] * I

    Lf = LaxField(N, m, L, Lz, Lt, dL, Q, Lam, (TWO_PI_I * k / N) * I, k, (0j,),
                  (basis.combine(S) - k / N * I,), "top")
    return Lf, LaxField(N, m, M, Mz, level=k, label="top-M")


def sigma_to_t(S_sigma) -> np.ndarray:
    """Reduced T-basis coefficients (sl(2)) of sum_a S_a sigma_a."""
    basis = SlnBasis(2)
    out = np.zeros(basis.dim, dtype=complex)
    for a in (1, 2, 3):
        idx, c = SIGMA_FROM_T[a]
        out[basis.position[idx]] += S_sigma[a - 1] * c
    return out


# ---------------------------------------------------------------------------
# BC1 Calogero-Inozemtsev


def _ci_kernel(x, z, a, m):
    """K_a(x, z) = e(x d_tau omega_a) phi(x, z + omega_a) with
    (value, d_x, d_z, d_x d_z, d_tau at fixed x, z)."""
    w = m.omega[a]
    dw = m.domega[a]
    j = phi_jet(x, z + w, m)
    pre = e(x * dw)
    c = TWO_PI_I * dw
    return (
        pre * j.value,
        pre * (j.u + c * j.value),
        pre * j.z,
        pre * (j.uz + c * j.z),
        pre * (j.tau + j.z * dw),
    )


def build_ci_lax(u, v, nu_tilde, m: ModularPoint, kappa=0):
    """BC1 pair: L = diag(v, -v) + off-diagonal sum nu~_a K_a(+-2u, z), M with d_x K_a."""
    nt = np.asarray(nu_tilde, dtype=complex)
    if nt.shape != (4,):
        raise DomainError("the BC1 pair needs four constants nu~_0..nu~_3")
    if m.distance_to_lattice(4 * u) < m.pole_tol:
        raise DegenerateConfigurationError("2u sits on a half period")
    k = _level(kappa)
    c = _m_scale(kappa)
    s0 = PAULI[0]

    def parts(z, slot):
        x12 = sum(nt[a] * _ci_kernel(2 * u, z, a, m)[slot] for a in range(4))
        x21 = sum(nt[a] * _ci_kernel(-2 * u, z, a, m)[slot] for a in range(4))
        return x12, x21

    def L(z):
        x12, x21 = parts(z, 0)
        return np.array([[v, x12], [x21, -v]], dtype=complex) - k / 2 * _log_theta_derivs(z, m)[0] * s0

    def Lz(z):
        x12, x21 = parts(z, 2)
        return np.array([[0, x12], [x21, 0]], dtype=complex) + k / 2 * _log_theta_derivs(z, m)[1] * s0

    def Lt(z):
        x12, x21 = parts(z, 4)
        return np.array([[0, x12], [x21, 0]], dtype=complex) - k / 2 * _log_theta_derivs(z, m)[4] * s0

    def dL(z, rate):
        du, dv = rate
        y12, y21 = parts(z, 1)
        return np.array([[dv, 2 * y12 * du], [-2 * y21 * du, -dv]], dtype=complex)

    def M(z):
        y12, y21 = parts(z, 1)
        return c * np.array([[0, y12], [y21, 0]], dtype=complex) - k / 2 * _log_theta_derivs(z, m)[3] * s0

    def Mz(z):
        y12, y21 = parts(z, 3)
        return c * np.array([[0, y12], [y21, 0]], dtype=complex) - k / 2 * _log_theta_derivs(z, m)[4] * s0

    poles = tuple(-m.omega[a] for a in range(4))
    res = []
    for a in range(4):
        r = nt[a] * np.array([[0, e(2 * u * m.domega[a])], [e(-2 * u * m.domega[a]), 0]], dtype=complex)
        res.append(r - (k / 2 * s0 if a == 0 else 0))
    gt = np.diag([e(u), e(-u)])
    Lf = LaxField(2, m, L, Lz, Lt, dL, np.eye(2, dtype=complex), gt, TWO_PI_I * k / 2 * s0, k,
                  poles, tuple(res), "CI")
    return Lf, LaxField(2, m, M, Mz, level=k, label="CI-M")


def ci_hamiltonian(u, v, nu_lax, m: ModularPoint) -> complex:
    """v^2/2 - (1/2) sum nu_a^2 E2(u - omega_a)."""
    from .elliptic import E2

    nl = np.asarray(nu_lax, dtype=complex)
    return 0.5 * v * v - 0.5 * sum(nl[a] ** 2 * E2(u - m.omega[a], m) for a in range(4))


# ---------------------------------------------------------------------------
# Zhukovsky-Volterra gyrostat


def build_zvg_lax(g: GyroState, m: ModularPoint, kappa=0):
    """Gyrostat pair: L = sum (S_a varphi_a(z) + nu~_a varphi_a(z - omega_a)) sigma_a,
    M = -sum S_a varphi_b varphi_c sigma_a + E1(z) L (scalar parts added for kappa != 0)."""
    S, nt = g.S, g.nu_tilde
    k = _level(kappa)
    c = _m_scale(kappa)
    sig = PAULI

    def jets(z):
        V = {a: varphi_sl2_jet(a, z, m) for a in (1, 2, 3)}
        W = {a: varphi_sl2_jet(a, z - sl2_omega(a, m), m) for a in (1, 2, 3)}
        return V, W

    def L0(V, W, slot=0):
        return sum((S[a - 1] * V[a][slot] + nt[a - 1] * W[a][slot]) * sig[a] for a in (1, 2, 3))

    def L(z):
        V, W = jets(z)
        return L0(V, W) - k / 2 * _log_theta_derivs(z, m)[0] * sig[0]

    def Lz(z):
        V, W = jets(z)
        return L0(V, W, 1) + k / 2 * _log_theta_derivs(z, m)[1] * sig[0]

    def Lt(z):
        V, W = jets(z)
        out = sum((S[a - 1] * V[a][2] + nt[a - 1] * (W[a][2] - W[a][1] * sl2_domega(a))) * sig[a]
                  for a in (1, 2, 3))
        return out - k / 2 * _log_theta_derivs(z, m)[4] * sig[0]

    def dL(z, rate):
        V, _ = jets(z)
        return sum(rate[a - 1] * V[a][0] * sig[a] for a in (1, 2, 3))

    def M(z):
        V, W = jets(z)
        e1, _, _, lt, _ = _log_theta_derivs(z, m)
        body = sum(-S[a - 1] * V[cyclic(a)[0]][0] * V[cyclic(a)[1]][0] * sig[a] for a in (1, 2, 3))
        return c * (body + e1 * L0(V, W)) - k / 2 * lt * sig[0]

    def Mz(z):
        V, W = jets(z)
        e1, e2, _, _, dlt = _log_theta_derivs(z, m)
        body = 0
        for a in (1, 2, 3):
            b, cc = cyclic(a)
            body = body - S[a - 1] * (V[b][1] * V[cc][0] + V[b][0] * V[cc][1]) * sig[a]
        return c * (body - e2 * L0(V, W) + e1 * L0(V, W, 1)) - k / 2 * dlt * sig[0]

    Q, Lam = _q_lambda(2)
    poles = (0j,) + tuple(sl2_omega(a, m) for a in (1, 2, 3))
    res = (sum(S[a - 1] * sig[a] for a in (1, 2, 3)) - k / 2 * sig[0],) + tuple(
        nt[a - 1] * sig[a] for a in (1, 2, 3))
    Lf = LaxField(2, m, L, Lz, Lt, dL, Q, Lam, TWO_PI_I * k / 2 * sig[0], k, poles, res, "ZVG")
    return Lf, LaxField(2, m, M, Mz, level=k, label="ZVG-M")


def zvg_lax_nu_prime_form(g: GyroState, m: ModularPoint) -> Callable[[complex], Matrix]:
    """The equivalent form sum (S_a varphi_a(z) + nu'_a / varphi_a(z)) sigma_a."""
    nup = g.nu_prime(m)

    def L(z):
        out = np.zeros((2, 2), dtype=complex)
        for a in (1, 2, 3):
            f = varphi_sl2_jet(a, z, m)[0]
            out += (g.S[a - 1] * f + nup[a - 1] / f) * PAULI[a]
        return out

    return L


def zvg_hamiltonian(g: GyroState, m: ModularPoint, J=None) -> complex:
    """Lax-frame gyrostat Hamiltonian -(1/2) sum (J_a S_a^2 - 2 nu'_a S_a)."""
    from .flows import gyro_inertia

    J = gyro_inertia(m) if J is None else np.asarray(J)
    nup = g.nu_prime(m)
    return complex(-0.5 * np.sum(J * g.S ** 2 - 2 * nup * g.S))


# ---------------------------------------------------------------------------
# dispatch for the isomonodromic versions


NONAUTONOMOUS_KINDS = ("CI", "ZVG", "ET", "CM")


def build_nonautonomous(kind: str, state, m: ModularPoint, kappa):
    """Isomonodromic pair of the given kind at level kappa (non-zero).

    ``state`` is (u, v, nu~) for CI, a GyroState for ZVG, a T-coefficient vector for ET
    and a CMState for CM.
    """
    if kappa == 0:
        raise MisuseError("isomonodromic pairs need a non-zero kappa")
    if kind == "CI":
        u, v, nt = state
        return build_ci_lax(u, v, nt, m, kappa)
    if kind == "ZVG":
        return build_zvg_lax(state, m, kappa)
    if kind == "ET":
        return build_top_lax(state, m, kappa)
    if kind == "CM":
        return build_cm_lax(state, m, kappa)
    raise DomainError(f"unknown kind {kind!r}; expected one of {NONAUTONOMOUS_KINDS}")


# ---------------------------------------------------------------------------
# checks


def quasi_periodicity_residual(L: LaxField, z) -> float:
    """Worst deviation from the declared multiplier laws, relative to max(1, |L(z)|)."""
    if L.g1 is None or L.gtau is None:
        raise DomainError(f"{L.label or 'field'} declares no multipliers")
    m = L.m
    A = L(z)
    r1 = _norm(L(z + 1) - np.linalg.solve(L.g1, A @ L.g1))
    shift = 0 if L.tau_shift is None else L.tau_shift
    r2 = _norm(L(z + m.tau) - np.linalg.solve(L.gtau, A @ L.gtau) - shift)
    return max(r1, r2) / max(1.0, _norm(A))


def residue_residual(L: LaxField, radius: float = 1e-2) -> float:
    """Worst mismatch between contour residues and the declared residue data."""
    return max(_norm(L.residue(p, radius) - r) for p, r in zip(L.poles, L.residues))


@dataclass
class SpectralFit:
    """Coefficients of (1/j) tr L^j over {1, E_i(z - z_a)}."""

    constant: complex
    coefficients: dict
    residual: float
    condition: float

    def as_dict(self):
        return {
            "constant": [self.constant.real, self.constant.imag],
            "coefficients": {f"E{i}(z-z{a})": [c.real, c.imag] for (i, a), c in self.coefficients.items()},
            "residual": self.residual,
            "condition": self.condition,
        }


def default_samples(m: ModularPoint, poles, n: int = 24, seed: int = 0, guard: float = 0.08):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        z = rng.uniform() + rng.uniform() * m.tau
        if all(m.distance_to_lattice(z - p) > guard for p in poles):
            out.append(z)
    return out


def spectral_invariants(L: LaxField, j: int, z_samples=None, orders=None, max_condition: float = 1e10) -> SpectralFit:
    """Least-squares expansion of (1/j) tr L^j(z) over {1} and E_i(z - z_a)."""
    from .elliptic import eisenstein

    if j < 1 or j > L.N:
        raise DomainError("need 1 <= j <= N")
    orders = tuple(range(1, j + 1)) if orders is None else tuple(orders)
    poles = L.poles
    zs = default_samples(L.m, poles) if z_samples is None else list(z_samples)
    cols = [(0, None)] + [(i, a) for i in orders for a in range(len(poles))]
    A = np.array([[1.0 if i == 0 else eisenstein(i, z - poles[a], L.m) for i, a in cols] for z in zs])
    b = np.array([np.trace(np.linalg.matrix_power(L(z), j)) / j for z in zs])
    cond = float(np.linalg.cond(A)) if len(zs) >= len(cols) else math.inf
    if not cond < max_condition:
        raise ConditioningError(f"basis matrix condition {cond:.3g}; add more z samples away from the poles")
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.abs(A @ sol - b).max() / max(1.0, np.abs(b).max()))
    coeffs = {(i, a): complex(s) for (i, a), s in zip(cols[1:], sol[1:])}
    return SpectralFit(complex(sol[0]), coeffs, resid, cond)


def lax_residual(L: LaxField, M: LaxField, rate, z, kappa=None) -> float:
    """Zero-curvature residual.

    Autonomous (level 0): |dL/dt - [L, M]| with dL/dt along ``rate`` (the state velocity).
    Isomonodromic: |d_tau L - d_z M - (1/k)[L, M]| where d_tau L is the explicit
    tau-derivative plus the state derivative along ``rate = dX/dtau``.
    """
    level = L.level
    if kappa is not None:
        if (kappa == 0) != (level == 0):
            raise MisuseError("kappa does not match the level the pair was built with")
    if L.dstate is None:
        raise DomainError(f"{L.label} does not expose a state derivative")
    A = L(z)
    B = M(z)
    comm = A @ B - B @ A
    if level == 0:
        return _norm(L.dstate(z, rate) - comm)
    if L.dtau is None:
        raise DomainError(f"{L.label} does not expose an explicit tau-derivative")
    return _norm(L.dtau(z) + L.dstate(z, rate) - M.dz(z) - comm / level)
