"""Singular gauge transformations from degree-zero to degree-one bundles.

The rank-two case is made explicit: the BC1 pair (u, v, nu~) is sent to the
gyrostat spin S by ``L1 = Xi L0 Xi^-1 - k d_z Xi Xi^-1`` and, equivalently, by
closed theta-function formulas (``cm_to_zvg_coords``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import _q_lambda, sigma_coefficients
from .elliptic import DomainError, ModularPoint, jacobi_theta, theta, theta_char, e_N
from .flows import HADAMARD, nu_prime_from_tilde
from .lax import DegenerateConfigurationError, GyroState, LaxField


@dataclass(frozen=True)
class ModificationMatrix:
    """Xi(z) = Xi~(z) diag(c_l) with Xi~_ij = theta[i/N - 1/2; N/2](z - N u_j, N tau)."""

    u: np.ndarray
    m: ModularPoint
    column_scale: np.ndarray
    kernel_vector: np.ndarray

    @property
    def N(self) -> int:
        return len(self.u)

    def _raw(self, z, order: int) -> np.ndarray:
        N = self.N
        mN = self.m.with_tau(N * self.m.tau)
        return np.array([[theta_char(i / N - 0.5, N / 2, z - N * self.u[j], mN, dz_order=order)
                          for j in range(N)] for i in range(1, N + 1)])

    def evaluate(self, z, order: int = 0) -> np.ndarray:
        return self._raw(z, order) * self.column_scale[None, :]

    def __call__(self, z) -> np.ndarray:
        return self.evaluate(z)

    def tau_multiplier(self, z) -> np.ndarray:
        """Lambda~(z) = -e_N(-z - tau/2) Lambda."""
        _, Lam = _q_lambda(self.N)
        return -e_N(-z - self.m.tau / 2, self.N) * Lam


def kernel_column(u, m: ModularPoint) -> np.ndarray:
    """k_l = (-1)^l prod_{j<k; j,k != l} theta(u_k - u_j), l = 1..N."""
    N = len(u)
    out = np.empty(N, dtype=complex)
    for l in range(1, N + 1):
        prod = 1 + 0j
        for j in range(1, N + 1):
            for k in range(j + 1, N + 1):
                if l not in (j, k):
                    prod *= theta(u[k - 1] - u[j - 1], m)
        out[l - 1] = (-1) ** l * prod
    return out


def build_xi(u, m: ModularPoint, r=None) -> ModificationMatrix:
    """Modification matrix whose kernel at z = 0 is the spin eigenvector ``r``.

    Without ``r`` the unnormalised Xi~ is returned (its kernel is ``kernel_column``).
    """
    u = np.asarray(u, dtype=complex)
    N = len(u)
    for i in range(N):
        for j in range(i + 1, N):
            if m.distance_to_lattice(u[i] - u[j]) < m.pole_tol:
                raise DegenerateConfigurationError(f"u_{i} and u_{j} coincide modulo the lattice")
    k = kernel_column(u, m)
    if r is None:
        return ModificationMatrix(u, m, np.ones(N, dtype=complex), k)
    r = np.asarray(r, dtype=complex)
    if np.any(np.abs(r) < 1e-300):
        raise ZeroDivisionError("the eigenvector r has a zero component")
    return ModificationMatrix(u, m, k / r, r)


def modify_lax(xi: ModificationMatrix, L0: LaxField, level=None) -> LaxField:
    """L1 = Xi L0 Xi^-1 - k d_z Xi Xi^-1 (k defaults to the level of L0)."""
    k = L0.level if level is None else level
    m = xi.m

    def L(z):
        X = xi.evaluate(z)
        try:
            Xi = np.linalg.inv(X)
        except np.linalg.LinAlgError as exc:
            raise DomainError(f"modification matrix is singular at z={z!r}") from exc
        return X @ L0(z) @ Xi - k * xi.evaluate(z, 1) @ Xi

    def Lz(z):
        X = xi.evaluate(z)
        X1 = xi.evaluate(z, 1)
        X2 = xi.evaluate(z, 2)
        Xi = np.linalg.inv(X)
        A = L0(z)
        B = X1 @ Xi
        return (X1 @ A @ Xi + X @ L0.dz(z) @ Xi - X @ A @ Xi @ B) - k * (X2 @ Xi - B @ B)

    Q, Lam = _q_lambda(xi.N)
    N = xi.N
    return LaxField(N, m, L, Lz, g1=np.linalg.inv(Q), gtau=np.linalg.inv(Lam),
                    tau_shift=(2j * math.pi * k / N) * np.eye(N), level=k, poles=(0j,), residues=(), label="modified")


def modified_residue(L1: LaxField, radius: float = 1e-2) -> np.ndarray:
    return L1.residue(0j, radius)


# ---------------------------------------------------------------------------
# rank two: explicit coordinates and constants


def zvg_constants_from_ci(nu_tilde) -> np.ndarray:
    """sigma-labelled gyrostat constants (nu~_sigma1, nu~_sigma2, nu~_sigma3) = (-nu~_2, nu~_3, nu~_1)."""
    nt = np.asarray(nu_tilde, dtype=complex)
    return np.array([-nt[2], nt[3], nt[1]])


def constant_maps(nu, m: ModularPoint):
    """(nu~, nu') from the four BC1 constants: nu~ = (1/2) H nu and nu' by the half-period formula.

    nu' is sigma-labelled and computed from the gyrostat constants ``zvg_constants_from_ci(nu~)``.
    """
    nt = 0.5 * HADAMARD @ np.asarray(nu, dtype=complex)
    return nt, nu_prime_from_tilde(zvg_constants_from_ci(nt), m)


def cm_to_zvg_coords(u, v, nu_tilde, kappa, m: ModularPoint) -> GyroState:
    """Gyrostat spin (Lax frame) from the BC1 data by the closed theta formulas.

    ``kappa`` is the connection level k of the pair.  Returned components are
    sigma-labelled: (sigma_1, sigma_2, sigma_3) = (W3, W2, W1) where W1, W2, W3 are the
    three theta combinations below.
    """
    nt = np.asarray(nu_tilde, dtype=complex)
    T = theta(2 * u, m)
    if abs(T) < 1e-14:
        raise DomainError("2u is a zero of theta")
    th0 = {k: jacobi_theta(k, 0, m) for k in (2, 3, 4)}
    a = {k: jacobi_theta(k, 2 * u, m) for k in (2, 3, 4)}
    ap = {k: jacobi_theta(k, 2 * u, m, dz_order=1) for k in (2, 3, 4)}
    tp = m.theta_prime0
    t2, t3, t4 = th0[2], th0[3], th0[4]
    a2, a3, a4 = a[2], a[3], a[4]
    k = kappa
    T2 = T * T
    W1 = (-v * t2 / tp * a2 / T - k / 2 * t2 / tp * ap[2] / T
          + nt[0] * t2 ** 2 / (t3 * t4) * a3 * a4 / T2 + nt[1] * a2 ** 2 / T2
          + nt[2] * t2 / t4 * a2 * a4 / T2 + nt[3] * t2 / t3 * a2 * a3 / T2)
    iW2 = (v * t3 / tp * a3 / T + k / 2 * t3 / tp * ap[3] / T
           - nt[0] * t3 ** 2 / (t2 * t4) * a2 * a4 / T2 - nt[1] * t3 / t2 * a3 * a2 / T2
           - nt[2] * t3 / t4 * a3 * a4 / T2 - nt[3] * a3 ** 2 / T2)
    W3 = (-v * t4 / tp * a4 / T - k / 2 * t4 / tp * ap[4] / T
          + nt[0] * t4 ** 2 / (t2 * t3) * a2 * a3 / T2 + nt[1] * t4 / t2 * a2 * a4 / T2
          + nt[2] * a4 ** 2 / T2 + nt[3] * t4 / t3 * a4 * a3 / T2)
    return GyroState(np.array([W3, iW2 / 1j, W1]), zvg_constants_from_ci(nt))


def residue_route(u, v, nu_tilde, kappa, m: ModularPoint, radius: float = 1e-2) -> GyroState:
    """Same spin obtained from the residue of the modified BC1 Lax matrix at z = 0."""
    from .lax import build_ci_lax

    L0, _ = build_ci_lax(u, v, nu_tilde, m)
    L1 = modify_lax(build_xi(np.array([u, -u]), m), L0, level=kappa)
    R = L1.residue(0j, radius)
    coef = sigma_coefficients(R)
    return GyroState(coef[1:], zvg_constants_from_ci(nu_tilde))


def lax_data_from_epvi(u, du_dtau, nu, kappa=1.0):
    """BC1 Lax data (u, v, nu~) for u'' = -sum nu_a^2 wp'(u + omega_a) at flow level kappa.

    v = kappa du/dtau and the Lax constants nu_lax = i sqrt(2) kappa nu (so nu_lax^2 = -2 kappa^2 nu^2).
    """
    nl = 1j * math.sqrt(2) * kappa * np.asarray(nu, dtype=complex)
    return u, kappa * du_dtau, 0.5 * HADAMARD @ nl


def _stencil(spin, s, h):
    S = [spin(s + k * h)[0].S for k in (-2, -1, 1, 2)]
    return (S[0] - 8 * S[1] + 8 * S[2] - S[3]) / (12 * h)


def pushforward_residual(traj, nu, kappa: float = 1.0, n_points: int = 9, h: float = 1e-3, margin: float = 0.1) -> float:
    """Map a CI or EPVI trajectory to gyrostat spins and test the gyrostat equation.

    The spin path S(s) is differentiated by 5-point central differences (one Richardson
    step, error O(h^6)) and compared
    with -2i S x (J S - nu') (divided by ``kappa`` and the tau direction for EPVI,
    where the connection level is kappa / 2 pi i).  Returns the worst relative residual.
    """
    from .flows import gyro_inertia, gyro_rhs

    spec = traj.spec
    tau_flow = spec.kind == "EPVI"
    if spec.kind not in ("CI", "EPVI"):
        raise DomainError("pushforward needs a CI or EPVI trajectory")
    level = kappa / (2j * math.pi) if tau_flow else 0.0

    def spin(s):
        y = traj.at(s)
        mm = spec.modular_point(s)
        u, v, nt = lax_data_from_epvi(y[0], y[1], nu, kappa if tau_flow else 1.0)
        return cm_to_zvg_coords(u, v, nt, level, mm), mm

    s0, s1 = traj.s[0], traj.s[-1]
    span = s1 - s0
    worst = 0.0
    for s in np.linspace(s0 + margin * span, s1 - margin * span, n_points):
        dS = (16 * _stencil(spin, s, h / 2) - _stencil(spin, s, h)) / 15
        g, mm = spin(s)
        rhs = gyro_rhs(g.S, g.nu_prime(mm), gyro_inertia(mm))
        if tau_flow:
            dS = dS / spec.direction
            rhs = rhs / kappa
        worst = max(worst, float(np.abs(dS - rhs).max() / max(1e-300, np.abs(rhs).max())))
    return worst
