"""Complex elliptic functions on the curve C/(Z + tau Z).

Conventions used throughout the package:

* ``e(x) = exp(2 pi i x)`` and ``e_N(x) = exp(2 pi i x / N)``.
* ``theta`` is the odd theta function with characteristics (1/2, 1/2),
  ``theta(z) = sum_j e((j+1/2)^2 tau/2 + (j+1/2)(z+1/2))``.
* ``E1 = d/dz log theta``, ``E2 = -d/dz E1``, ``wp = E2 - 2 eta1``.
* ``phi(u, z) = theta(u+z) theta'(0) / (theta(u) theta(z))``.
* Half periods follow the sl(2) table: omega_1 = 1/2 pairs with sigma_3,
  omega_2 = tau/2 with sigma_1, omega_3 = (1+tau)/2 with sigma_2.

All tau-derivatives are analytic: the heat relation
``d_tau theta = d_z^2 theta / (4 pi i)`` turns them into z-derivatives of
the same series.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

TWO_PI_I = 2j * math.pi
POLE_TOL = 1e-8
SERIES_RTOL = 1e-16
SERIES_CAP = 500
IM_TAU_FLOOR = 0.05


class DomainError(ValueError):
    """Raised for arguments outside the domain of a function."""


class PoleError(ArithmeticError):
    """Raised when an argument sits on a lattice translate of a pole.

    ``translate`` is the nearest lattice point ``m + n tau`` and ``label``
    names the offending sub-expression.
    """

    def __init__(self, z, translate, label="z"):
        self.z = z
        self.translate = translate
        self.label = label
        super().__init__(f"{label}={z!r} is too close to lattice point {translate!r}")


def e(x):
    return cmath.exp(TWO_PI_I * x)


def e_N(x, N):
    return cmath.exp(TWO_PI_I * x / N)


@dataclass(frozen=True)
class ModularPoint:
    """Modular parameter tau together with its derived constants."""

    tau: complex
    pole_tol: float = field(default=POLE_TOL, compare=False, repr=False)

    def __post_init__(self):
        tau = complex(self.tau)
        object.__setattr__(self, "tau", tau)
        if not tau.imag > 0:
            raise DomainError(f"Im tau must be positive, got tau={tau!r}")

    @cached_property
    def q(self) -> complex:
        return e(self.tau)

    @cached_property
    def omega(self) -> tuple[complex, complex, complex, complex]:
        t = self.tau
        return (0j, 0.5 + 0j, t / 2, (1 + t) / 2)

    @cached_property
    def domega(self) -> tuple[float, float, float, float]:
        """d omega_a / d tau for a = 0..3."""
        return (0.0, 0.0, 0.5, 0.5)

    @cached_property
    def _theta_at_zero(self) -> np.ndarray:
        return theta_jet(0.5, 0.5, 0j, self, 5)

    @cached_property
    def theta_prime0(self) -> complex:
        return self._theta_at_zero[1]

    @cached_property
    def eta1(self) -> complex:
        """Constant in E1(z) ~ 1/z - 2 eta1 z, i.e. -theta'''(0) / (6 theta'(0))."""
        d = self._theta_at_zero
        return -d[3] / (6 * d[1])

    @cached_property
    def deta1(self) -> complex:
        """d eta1 / d tau."""
        d = self._theta_at_zero
        # d_tau theta^(k)(0) = theta^(k+2)(0) / (4 pi i)
        d1t = d[3] / (2 * TWO_PI_I)
        d3t = d[5] / (2 * TWO_PI_I)
        return -(d3t * d[1] - d[3] * d1t) / (6 * d[1] ** 2)

    @cached_property
    def e_values(self) -> tuple[complex, complex, complex, complex]:
        """E2(omega_a) for a = 1, 2, 3 (index 0 is unused and set to nan)."""
        return (complex("nan"),) + tuple(E2(w, self) for w in self.omega[1:])

    @cached_property
    def wp_values(self) -> tuple[complex, complex, complex, complex]:
        return (complex("nan"),) + tuple(x - 2 * self.eta1 for x in self.e_values[1:])

    def lattice_point(self, z) -> complex:
        """Nearest point m + n tau of the period lattice."""
        n = round(z.imag / self.tau.imag)
        m = round((z - n * self.tau).real)
        return m + n * self.tau

    def check_regular(self, z, label="z", tol=None) -> None:
        tol = self.pole_tol if tol is None else tol
        w = self.lattice_point(z)
        if abs(z - w) < tol:
            raise PoleError(z, w, label)

    def distance_to_lattice(self, z) -> float:
        best = math.inf
        n0 = round(z.imag / self.tau.imag)
        for n in (n0 - 1, n0, n0 + 1):
            x = z - n * self.tau
            m0 = round(x.real)
            for m in (m0 - 1, m0, m0 + 1):
                best = min(best, abs(x - m))
        return best

    def with_tau(self, tau) -> "ModularPoint":
        return ModularPoint(tau, self.pole_tol)

    def guarded(self, tol: float) -> "ModularPoint":
        """Same tau, but every regularity check uses ``tol`` (for rejection sampling)."""
        return ModularPoint(self.tau, tol)


@dataclass(frozen=True)
class LatticeIndex:
    """Element (a1, a2) of (Z/NZ)^2, stored in canonical reduced form."""

    a1: int
    a2: int
    N: int = field(default=2)

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("N must be positive")
        object.__setattr__(self, "a1", self.a1 % self.N)
        object.__setattr__(self, "a2", self.a2 % self.N)

    @property
    def is_zero(self) -> bool:
        return self.a1 == 0 and self.a2 == 0

    def __add__(self, other):
        return LatticeIndex(self.a1 + other.a1, self.a2 + other.a2, self.N)

    def __sub__(self, other):
        return LatticeIndex(self.a1 - other.a1, self.a2 - other.a2, self.N)

    def __neg__(self):
        return LatticeIndex(-self.a1, -self.a2, self.N)

    def cross(self, other) -> int:
        return self.a1 * other.a2 - self.a2 * other.a1

    def point(self, m: ModularPoint) -> complex:
        """(a1 + a2 tau) / N."""
        return (self.a1 + self.a2 * m.tau) / self.N

    @classmethod
    def nonzero(cls, N: int) -> list["LatticeIndex"]:
        return [cls(i, j, N) for i in range(N) for j in range(N) if (i, j) != (0, 0)]


# ---------------------------------------------------------------------------
# theta series


def _as_float(x) -> float:
    return float(Fraction(x)) if isinstance(x, (str, Fraction)) else float(x)


def theta_jet(a, b, z, m: ModularPoint, order: int) -> np.ndarray:
    """z-derivatives 0..order of theta[a; b](z | tau) from one series pass.

    Terms are accumulated outward from the largest term; the loop stops once
    both newest terms fall below ``SERIES_RTOL`` times the running scale
    (hard cap ``SERIES_CAP`` terms).
    """
    tau = m.tau
    if not tau.imag > 0:
        raise DomainError(f"theta series diverges for Im tau <= 0 (tau={tau!r})")
    a = _as_float(a)
    b = _as_float(b)
    z = complex(z)
    # term magnitude ~ exp(-pi Im(tau) (n+a)^2 - 2 pi (n+a) Im z), peak near:
    centre = round(-z.imag / tau.imag - a)
    out = np.zeros(order + 1, dtype=complex)
    scale = 0.0
    zb = z + b
    pit = math.pi * 1j * tau
    for k in range(SERIES_CAP):
        newest = 0.0
        for n in ((centre,) if k == 0 else (centre + k, centre - k)):
            x = n + a
            t = cmath.exp(pit * x * x + TWO_PI_I * x * zb)
            w = TWO_PI_I * x
            p = t
            for r in range(order + 1):
                out[r] += p
                p *= w
            newest = max(newest, abs(t) * max(1.0, abs(w)) ** order)
        scale = max(scale, newest, abs(out[0]))
        if k > 1 and newest < SERIES_RTOL * scale:
            break
    return out


def theta_char(a, b, z, m: ModularPoint, dz_order: int = 0, dtau_order: int = 0) -> complex:
    """theta[a; b](z | tau) and its mixed z/tau derivatives."""
    if dz_order > 3 or dtau_order > 1 or dz_order < 0 or dtau_order < 0:
        raise DomainError("supported orders: dz_order <= 3, dtau_order <= 1")
    k = dz_order + 2 * dtau_order
    jet = theta_jet(a, b, z, m, k)
    return jet[k] / (2 * TWO_PI_I) ** dtau_order


def theta(z, m: ModularPoint, dz_order: int = 0, dtau_order: int = 0) -> complex:
    """The odd theta function theta_11 = theta[1/2; 1/2]."""
    return theta_char(0.5, 0.5, z, m, dz_order, dtau_order)


_JACOBI = {1: (0.5, 0.5), 2: (0.5, 0.0), 3: (0.0, 0.0), 4: (0.0, 0.5)}


def jacobi_theta(k: int, z, m: ModularPoint, dz_order: int = 0, dtau_order: int = 0) -> complex:
    """theta_1 .. theta_4 with theta_1 = theta_11, theta_2 = theta_10,
    theta_3 = theta_00, theta_4 = theta_01."""
    a, b = _JACOBI[k]
    return theta_char(a, b, z, m, dz_order, dtau_order)


def theta_series_oracle(a, b, z, tau, window: int = 60) -> complex:
    """Fixed-window brute-force sum over |j| <= window (reference only)."""
    j = np.arange(-window, window + 1, dtype=float) + float(a)
    return complex(np.sum(np.exp(1j * math.pi * tau * j * j + TWO_PI_I * j * (z + float(b)))))


# ---------------------------------------------------------------------------
# log-derivatives of theta


def _log_theta_derivs(z, m: ModularPoint, label="z"):
    """(E1, E2, E3-like, Ltau, d_z Ltau) at z, where Ltau = d_tau log theta."""
    m.check_regular(z, label)
    d = theta_jet(0.5, 0.5, z, m, 4)
    r1 = d[1] / d[0]
    r2 = d[2] / d[0]
    r3 = d[3] / d[0]
    e1 = r1
    e2 = r1 * r1 - r2
    de2 = -(r3 - 3 * r2 * r1 + 2 * r1 ** 3)
    ltau = r2 / (2 * TWO_PI_I)
    dltau = (r3 - r2 * r1) / (2 * TWO_PI_I)
    return e1, e2, de2, ltau, dltau


def E1(z, m: ModularPoint) -> complex:
    m.check_regular(z)
    d = theta_jet(0.5, 0.5, z, m, 1)
    return d[1] / d[0]


def E2(z, m: ModularPoint) -> complex:
    m.check_regular(z)
    d = theta_jet(0.5, 0.5, z, m, 2)
    r1 = d[1] / d[0]
    return r1 * r1 - d[2] / d[0]


def dE2(z, m: ModularPoint) -> complex:
    """d/dz E2(z) (= wp'(z))."""
    return _log_theta_derivs(z, m)[2]


def E1_dtau(z, m: ModularPoint) -> complex:
    """Partial tau-derivative of E1(z | tau) at fixed z."""
    return _log_theta_derivs(z, m)[4]


def E2_dtau(z, m: ModularPoint) -> complex:
    """Partial tau-derivative of E2(z | tau) at fixed z."""
    m.check_regular(z)
    d = theta_jet(0.5, 0.5, z, m, 5)
    r = d / d[0]
    # E2_tau = -d_z^2 (d_tau log theta), d_tau log theta = r2 / (4 pi i)
    d2l = (r[4] - 2 * r[3] * r[1] + 2 * r[2] * r[1] ** 2 - r[2] ** 2) / (2 * TWO_PI_I)
    return -d2l


def eisenstein(j: int, z, m: ModularPoint) -> complex:
    """Eisenstein functions E_1, E_2 and E_j = (-1)^j/(j-1)! d^{j-2} E2 for j <= 5."""
    if j < 1:
        raise DomainError("j must be >= 1")
    if j == 1:
        return E1(z, m)
    if j == 2:
        return E2(z, m)
    if j > 5:
        raise DomainError("E_j implemented for j <= 5")
    m.check_regular(z)
    d = theta_jet(0.5, 0.5, z, m, j)
    r = d / d[0]
    # derivatives of log theta via the cumulant recursion
    logd = [0j] * (j + 1)
    for n in range(1, j + 1):
        s = r[n]
        for k in range(1, n):
            s -= math.comb(n - 1, k - 1) * logd[k] * r[n - k]
        logd[n] = s
    # E2 = -logd[2]; d^{j-2} E2 = -logd[j]
    return (-1) ** j / math.factorial(j - 1) * (-logd[j])


def weierstrass_zeta(z, m: ModularPoint) -> complex:
    return E1(z, m) + 2 * m.eta1 * z


def weierstrass_p(z, m: ModularPoint) -> complex:
    return E2(z, m) - 2 * m.eta1


# ---------------------------------------------------------------------------
# phi kernel


@dataclass(frozen=True)
class PhiJet:
    """phi(u, z) with first and second partials in u, z and the tau-partial."""

    value: complex
    u: complex
    z: complex
    tau: complex
    uu: complex
    uz: complex
    zz: complex


def phi_jet(u, z, m: ModularPoint) -> PhiJet:
    """phi(u, z | tau) with analytic partial derivatives."""
    m.check_regular(u, "u")
    m.check_regular(z, "z")
    m.check_regular(u + z, "u+z")
    a1, a2, _, at, _ = _log_theta_derivs(u + z, m, "u+z")
    b1, b2, _, bt, _ = _log_theta_derivs(u, m, "u")
    c1, c2, _, ct, _ = _log_theta_derivs(z, m, "z")
    d0 = m._theta_at_zero
    val = theta(u + z, m) * d0[1] / (theta(u, m) * theta(z, m))
    gu = a1 - b1
    gz = a1 - c1
    gt = at - bt - ct + d0[3] / (2 * TWO_PI_I * d0[1])
    guu = -a2 + b2
    guz = -a2
    gzz = -a2 + c2
    return PhiJet(
        value=val,
        u=val * gu,
        z=val * gz,
        tau=val * gt,
        uu=val * (guu + gu * gu),
        uz=val * (guz + gu * gz),
        zz=val * (gzz + gz * gz),
    )


def phi(u, z, m: ModularPoint, du_order: int = 0, dtau_order: int = 0) -> complex:
    """phi(u, z); du_order=1 gives f(u, z) = d_u phi, dtau_order=1 the tau-partial."""
    if dtau_order == 0 and du_order == 0:
        m.check_regular(u, "u")
        m.check_regular(z, "z")
        m.check_regular(u + z, "u+z")
        return theta(u + z, m) * m.theta_prime0 / (theta(u, m) * theta(z, m))
    j = phi_jet(u, z, m)
    if dtau_order == 1 and du_order == 0:
        return j.tau
    if du_order == 1 and dtau_order == 0:
        return j.u
    if du_order == 2 and dtau_order == 0:
        return j.uu
    raise DomainError("supported: (du, dtau) in {(0,0), (1,0), (2,0), (0,1)}")


def f_kernel(u, z, m: ModularPoint) -> complex:
    """f(u, z) = d_u phi(u, z)."""
    return phi(u, z, m, du_order=1)


# ---------------------------------------------------------------------------
# lattice-indexed and eta-deformed kernels


def varphi_gamma(gamma: LatticeIndex, z, m: ModularPoint, derivative: bool = False) -> complex:
    """varphi_gamma(z) = e_N(gamma_2 z) phi((gamma_1 + gamma_2 tau)/N, z).

    ``derivative=True`` returns the companion f_gamma(z).
    """
    if gamma.is_zero:
        raise DomainError("varphi_gamma is undefined for the zero index")
    u = gamma.point(m)
    pref = e_N(gamma.a2 * z, gamma.N)
    if derivative:
        return pref * phi(u, z, m, du_order=1)
    return pref * phi(u, z, m)


def phi_eta(a: LatticeIndex, eta, z, m: ModularPoint) -> complex:
    """varphi_a^eta(z) = e_N(a_2 z) phi((a_1 + a_2 tau)/N + eta, z)."""
    return e_N(a.a2 * z, a.N) * phi(a.point(m) + eta, z, m)


# sl(2) labelling: alpha = 1, 2, 3 <-> lattice index and half period
SL2_INDEX = {1: LatticeIndex(0, 1, 2), 2: LatticeIndex(1, 1, 2), 3: LatticeIndex(1, 0, 2)}
SL2_HALF_PERIOD = {1: 2, 2: 3, 3: 1}  # sigma_alpha -> index a of omega_a


def sl2_omega(alpha: int, m: ModularPoint) -> complex:
    """Half period attached to sigma_alpha (sigma_1 <-> tau/2, sigma_2 <-> (1+tau)/2, sigma_3 <-> 1/2)."""
    return m.omega[SL2_HALF_PERIOD[alpha]]


def sl2_domega(alpha: int) -> float:
    return (0.0, 0.5, 0.5, 0.0)[alpha]


def varphi_sl2(alpha: int, z, m: ModularPoint) -> complex:
    """varphi_alpha(z) = e(z d_tau omega_alpha) phi(omega_alpha, z) for sigma_alpha."""
    return varphi_gamma(SL2_INDEX[alpha], z, m)


def varphi_sl2_jet(alpha: int, z, m: ModularPoint):
    """varphi_alpha(z) with (d_z, d_tau at fixed z, d_z^2) derivatives."""
    w = sl2_omega(alpha, m)
    dw = sl2_domega(alpha)
    j = phi_jet(w, z, m)
    pref = e(dw * z)
    c = TWO_PI_I * dw
    val = pref * j.value
    dz = pref * (j.z + c * j.value)
    dzz = pref * (j.zz + 2 * c * j.z + c * c * j.value)
    dtau = pref * (j.tau + j.u * dw)
    return val, dz, dtau, dzz


def varphi_sl2_eta(alpha: int, eta, z, m: ModularPoint) -> complex:
    """eta-deformed varphi_alpha^eta(z) for sigma_alpha; alpha = 0 gives phi(eta, z)."""
    if alpha == 0:
        return phi(eta, z, m)
    return phi_eta(SL2_INDEX[alpha], eta, z, m)
