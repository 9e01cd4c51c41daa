"""Right-hand sides of the autonomous vector fields.

Every function here returns the time derivative of the state for the
autonomous system at a fixed modular point.  The isomonodromic versions are
``kappa d_tau X = F(X; tau)`` with the same ``F`` evaluated at the running tau.

Gyrostat flows are written in the Lax frame, where ``L = sum S_a varphi_a sigma_a``:
``S' = -2i S x (J S - nu')``.  The textbook normalisation ``S' = S x J S + S x nu'``
is obtained with ``S_flow = -2i S``, ``nu'_flow = 2i nu'`` (see ``to_flow_frame``).
"""
from __future__ import annotations

import numpy as np

from .algebra import SlnBasis
from .elliptic import E2, DomainError, LatticeIndex, ModularPoint, dE2, sl2_omega, theta, e, sl2_domega

HADAMARD = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float)


def gyro_inertia(m: ModularPoint, convention: str = "E2") -> np.ndarray:
    """J_alpha for sigma_alpha: E2(omega_alpha) or wp(omega_alpha) (differ by 2 eta1)."""
    J = np.array([E2(sl2_omega(a, m), m) for a in (1, 2, 3)])
    if convention == "E2":
        return J
    if convention == "wp":
        return J - 2 * m.eta1
    raise DomainError(f"unknown inertia convention {convention!r}")


def nu_prime_from_tilde(nu_tilde, m: ModularPoint) -> np.ndarray:
    """nu'_a = -nu~_a e(-omega_a d_tau omega_a) (theta'(0) / theta(omega_a))^2, sigma-labelled."""
    nt = np.asarray(nu_tilde, dtype=complex)
    out = np.empty(3, dtype=complex)
    for a in (1, 2, 3):
        w = sl2_omega(a, m)
        out[a - 1] = -nt[a - 1] * e(-w * sl2_domega(a)) * (m.theta_prime0 / theta(w, m)) ** 2
    return out


def to_flow_frame(S, nu_prime):
    return -2j * np.asarray(S), 2j * np.asarray(nu_prime)


def from_flow_frame(S, nu_prime):
    return np.asarray(S) / (-2j), np.asarray(nu_prime) / 2j


def gyro_rhs(S, nu_prime, J) -> np.ndarray:
    """Lax-frame gyrostat field -2i S x (J S - nu')."""
    S = np.asarray(S, dtype=complex)
    return -2j * np.cross(S, np.asarray(J) * S - np.asarray(nu_prime))


def gyro_rhs_flow_frame(S, nu_prime, J) -> np.ndarray:
    """S x (J S) + S x nu'."""
    S = np.asarray(S, dtype=complex)
    return np.cross(S, np.asarray(J) * S) + np.cross(S, np.asarray(nu_prime))


def top_rhs(S, m: ModularPoint, basis: SlnBasis) -> np.ndarray:
    """Elliptic top S'_a = sum_g S_g S_(a-g) E2(g) C(a, g) on reduced coefficients."""
    N = basis.N
    S = np.asarray(S, dtype=complex)
    wE2 = {g: E2(LatticeIndex(*g, N).point(m), m) for g in basis.indices}
    out = np.zeros(basis.dim, dtype=complex)
    for i, a in enumerate(basis.indices):
        acc = 0j
        for g in basis.indices:
            d = (a[0] - g[0], a[1] - g[1])
            if d[0] % N == 0 and d[1] % N == 0:
                continue
            c = N / np.pi * np.sin(np.pi * (a[0] * g[1] - a[1] * g[0]) / N)
            if c == 0:
                continue
            acc += S[basis.position[g]] * basis.coefficient(S, d) * wE2[g] * c
        out[i] = acc
    return out


def ci_force(u, nu_lax, m: ModularPoint) -> complex:
    """v' of the BC1 system in Lax normalisation: (1/2) sum nu_a^2 wp'(u + omega_a)."""
    nl = np.asarray(nu_lax, dtype=complex)
    return 0.5 * sum(nl[a] ** 2 * dE2(u + m.omega[a], m) for a in range(4))


def ci_rhs(u, v, nu_lax, m: ModularPoint):
    return v, ci_force(u, nu_lax, m)


def nu_lax_from_tilde(nu_tilde) -> np.ndarray:
    """nu = (1/2) H nu~ (H is its own inverse up to the factor 4)."""
    return 0.5 * HADAMARD @ np.asarray(nu_tilde, dtype=complex)


def nu_tilde_from_lax(nu_lax) -> np.ndarray:
    return 0.5 * HADAMARD @ np.asarray(nu_lax, dtype=complex)


def cm_rhs(u, v, p, m: ModularPoint):
    """Spin Calogero-Moser field: u' = v, v_n' = -sum_j p_jn p_nj E2'(u_j - u_n), p' = [J_u p, p]."""
    u = np.asarray(u, dtype=complex)
    p = np.asarray(p, dtype=complex)
    N = len(u)
    E = np.zeros((N, N), dtype=complex)
    dE = np.zeros((N, N), dtype=complex)
    for j in range(N):
        for k in range(N):
            if j != k:
                E[j, k] = E2(u[j] - u[k], m)
                dE[j, k] = dE2(u[j] - u[k], m)
    vdot = np.array([-sum(p[j, n] * p[n, j] * dE[j, n] for j in range(N) if j != n) for n in range(N)])
    Jp = E * p
    return np.asarray(v, dtype=complex), vdot, Jp @ p - p @ Jp
