"""Classical XYZ chain with gyrostat boundaries.

Every site and both boundaries carry a group-valued matrix
``L~(z) = S0 + sum (S_a varphi_a(z) + nu~_a varphi_a(z - omega_a)) sigma_a``
(nu~ = 0 on interior sites).  Interior sites use the quadratic sl2 bracket,
boundaries the same bracket with the magnetic term and twice the scale.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .elliptic import E2, DomainError, ModularPoint, PoleError, dE2, sl2_omega
from .flows import nu_prime_from_tilde
from .poisson import Observable, direct_sum, site_table, sklyanin_sl2, sl2_group_lax, sl2_group_lax_gradient

BOUNDARY_SCALE = 2.0


class ConstraintError(ValueError):
    """The special-point constants C_i differ between sites."""


@dataclass
class ChainState:
    """sites: (N, 4) array of (S0, S1, S2, S3); boundaries: (S, nu~) with sigma-labelled nu~."""

    sites: np.ndarray
    minus: tuple
    plus: tuple
    m: ModularPoint

    def __post_init__(self):
        self.sites = np.asarray(self.sites, dtype=complex).reshape(-1, 4)
        self.minus = (np.asarray(self.minus[0], dtype=complex), np.asarray(self.minus[1], dtype=complex))
        self.plus = (np.asarray(self.plus[0], dtype=complex), np.asarray(self.plus[1], dtype=complex))

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @classmethod
    def random(cls, n_sites: int, m: ModularPoint, seed: int = 0, C=None, boundary_field: bool = True) -> "ChainState":
        """Random chain; with ``C`` each site's S0 is chosen so that C_i = C."""
        rng = np.random.default_rng(seed)
        c = lambda n: rng.normal(size=n) + 1j * rng.normal(size=n)
        sites = c(4 * n_sites).reshape(n_sites, 4)
        if C is not None:
            e = np.array([E2(sl2_omega(a, m), m) for a in (1, 2, 3)])
            for s in sites:
                s[0] = np.sqrt(C * np.sum(s[1:] ** 2) - np.sum(s[1:] ** 2 * e))
        nt = (lambda: c(3)) if boundary_field else (lambda: np.zeros(3, complex))
        return cls(sites, (c(4), nt()), (c(4), nt()), m)

    def site_constants(self) -> np.ndarray:
        """C_i = (S0^2 + sum S_a^2 E2(omega_a)) / sum S_a^2."""
        e = np.array([E2(sl2_omega(a, self.m), self.m) for a in (1, 2, 3)])
        out = []
        for s in self.sites:
            q = np.sum(s[1:] ** 2)
            if abs(q) < 1e-300:
                raise DomainError("site spin with sum S_a^2 = 0 has no special point")
            out.append((s[0] ** 2 + np.sum(s[1:] ** 2 * e)) / q)
        return np.array(out)

    def common_constant(self, tol: float = 1e-10) -> complex:
        C = self.site_constants()
        if len(C) == 0:
            raise DomainError("a chain without sites has no special-point constant")
        spread = np.abs(C - C[0]).max() / max(1.0, abs(C[0]))
        if spread > tol:
            raise ConstraintError(f"site constants differ by {spread:.3g}")
        return complex(C[0])

    def components(self):
        """(S, nu~) in the order K-, site 1..N, K+."""
        zero = np.zeros(3, complex)
        return [self.minus] + [(s, zero) for s in self.sites] + [self.plus]

    def flat(self) -> np.ndarray:
        return np.concatenate([S for S, _ in self.components()])

    def bracket_table(self, boundary_scale: float = BOUNDARY_SCALE):
        m = self.m
        bm = sklyanin_sl2(m, nu_prime_from_tilde(self.minus[1], m), scale=boundary_scale, kind="boundary")
        bp = sklyanin_sl2(m, nu_prime_from_tilde(self.plus[1], m), scale=boundary_scale, kind="boundary")
        tables = [bm] + [site_table(m)] * self.n_sites + [bp]
        prefixes = ["-"] + list(range(1, self.n_sites + 1)) + ["+"]
        return direct_sum(tables, prefixes)


def _chain_factors(state: ChainState, z):
    """[(component, matrix, dmatrix/dS list)] in the order of the trace product."""
    m = state.m
    comps = state.components()
    n = len(comps)
    grad_z = sl2_group_lax_gradient(z, m)
    out = [(n - 1, sl2_group_lax(*comps[-1], z, m), grad_z)]
    for i in range(state.n_sites, 0, -1):
        out.append((i, sl2_group_lax(*comps[i], z, m), grad_z))
    out.append((0, sl2_group_lax(*comps[0], z, m), grad_z))
    grad_mz = sl2_group_lax_gradient(-z, m)
    for i in range(1, state.n_sites + 1):
        L = sl2_group_lax(*comps[i], -z, m)
        if abs(np.linalg.det(L)) < 1e-14 * max(1.0, np.abs(L).max() ** 2):
            raise PoleError(-z, 0, "-z (singular site matrix)")
        Li = np.linalg.inv(L)
        out.append((i, Li, [-Li @ G @ Li for G in grad_mz]))
    return out


def transfer_h(state: ChainState, z) -> complex:
    """h(z) = tr[K+(z) L^N(z)...L^1(z) K-(z) L^1(-z)^-1 ... L^N(-z)^-1]."""
    P = np.eye(2, dtype=complex)
    for _, M, _ in _chain_factors(state, z):
        P = P @ M
    return complex(np.trace(P))


def transfer_gradient(state: ChainState, z) -> tuple[complex, np.ndarray]:
    """(h(z), dh/dS) over all components (4 per component), by the product rule."""
    factors = _chain_factors(state, z)
    mats = [M for _, M, _ in factors]
    k = len(mats)
    left = [np.eye(2, dtype=complex)]
    for M in mats:
        left.append(left[-1] @ M)
    right = [np.eye(2, dtype=complex)]
    for M in reversed(mats):
        right.append(M @ right[-1])
    right = right[::-1]
    grad = np.zeros((state.n_sites + 2, 4), dtype=complex)
    for j, (ci, _, dM) in enumerate(factors):
        for a in range(4):
            grad[ci, a] += np.trace(left[j] @ dM[a] @ right[j + 1])
    return complex(np.trace(left[k])), grad.ravel()


def _relative_pairing(g1, P, g2) -> float:
    total = g1 @ P @ g2
    scale = np.abs(g1) @ np.abs(P) @ np.abs(g2)
    return float(abs(total) / max(1e-300, scale))


def commutativity_residual(state: ChainState, z, w, boundary_scale: float = BOUNDARY_SCALE) -> float:
    """|{h(z), h(w)}| relative to the sum of absolute contributions."""
    P = state.bracket_table(boundary_scale).tensor(state.flat())
    _, gz = transfer_gradient(state, z)
    _, gw = transfer_gradient(state, w)
    return _relative_pairing(gz, P, gw)


def site_determinant_residual(state: ChainState, site: int, z) -> float:
    """{det L^i(z), S^i_b} for all b, relative; det L~ = S0^2 - sum S_a^2 varphi_a(z)^2."""
    from .elliptic import varphi_sl2

    m = state.m
    phis = [varphi_sl2(a, z, m) ** 2 for a in (1, 2, 3)]
    det = Observable({("S0", "S0"): 1.0, **{(f"S{a}", f"S{a}"): -phis[a - 1] for a in (1, 2, 3)}})
    table = site_table(m)
    s = state.sites[site]
    grad = det.gradient(table, s)
    P = table.tensor(s)
    return float(np.abs(grad @ P).max() / max(1e-300, (np.abs(grad) @ np.abs(P)).max()))


def special_point(C, m: ModularPoint, starts: int = 8, tol: float = 1e-13, max_iter: int = 60) -> complex:
    """A root z0 of E2(z0) = C by Newton from a grid of starting points in the cell."""
    grid = [(0.5 * (k % 4) + 0.2) / 2 + (0.3 + 0.4 * (k // 4)) * m.tau for k in range(starts)]
    for z in grid:
        try:
            for _ in range(max_iter):
                f = E2(z, m) - C
                d = dE2(z, m)
                if d == 0:
                    break
                step = f / d
                z = z - step
                if abs(step) < tol * max(1.0, abs(z)):
                    if abs(E2(z, m) - C) < 1e-9 * max(1.0, abs(C)):
                        return complex(z)
                    break
        except (PoleError, DomainError, OverflowError, ZeroDivisionError):
            continue
    raise DomainError(f"no root of E2(z) = {C!r} found from {starts} starting points")


def degenerate_site_residual(state: ChainState, z0=None) -> float:
    """max_i |det L^i(z0)| and the rank-one defect of L^i(z0), relative."""
    m = state.m
    if z0 is None:
        z0 = special_point(state.common_constant(), m)
    worst = 0.0
    for s in state.sites:
        L = sl2_group_lax(s, np.zeros(3), z0, m)
        worst = max(worst, abs(np.linalg.det(L)) / max(1.0, np.abs(L).max() ** 2))
    return float(worst)


def reflection_product_residual(state: ChainState, z) -> float:
    """max_i || L^i(z) L^i(-z) - det L^i(z) Id ||, relative."""
    m = state.m
    worst = 0.0
    for s in state.sites:
        A = sl2_group_lax(s, np.zeros(3), z, m)
        B = sl2_group_lax(s, np.zeros(3), -z, m)
        worst = max(worst, np.abs(A @ B - np.linalg.det(A) * np.eye(2)).max() / max(1.0, np.abs(A).max() ** 2))
    return float(worst)


def _pair_terms(state: ChainState, C):
    m = state.m
    e = np.array([E2(sl2_omega(a, m), m) for a in (1, 2, 3)])
    comps = state.components()
    n = len(comps)
    npm = nu_prime_from_tilde(state.minus[1], m)
    npp = nu_prime_from_tilde(state.plus[1], m)
    pairs = [(0, 1, npm), (n - 1, n - 2, npp)] + [(i, i + 1, None) for i in range(1, n - 2)]
    return comps, e, pairs


def boundary_hamiltonian(state: ChainState, C=None) -> complex:
    """H = sum of logs of nearest-neighbour bilinears (principal branch)."""
    if state.n_sites < 1:
        raise DomainError("the boundary Hamiltonian needs at least one site")
    C = state.common_constant() if C is None else C
    comps, e, pairs = _pair_terms(state, C)
    H = 0j
    for i, j, nu in pairs:
        A, B = comps[i][0], comps[j][0]
        val = A[0] * B[0] + np.sum(A[1:] * B[1:] * (C - e)) + (np.sum(nu * B[1:]) if nu is not None else 0)
        if abs(val) < 1e-300:
            raise DomainError(f"log argument vanishes on the bond ({i}, {j})")
        H += cmath.log(val)
    return H


def hamiltonian_gradient(state: ChainState, C=None) -> np.ndarray:
    """dH/dS over all components; the log branch constant drops out."""
    C = state.common_constant() if C is None else C
    comps, e, pairs = _pair_terms(state, C)
    G = np.zeros((len(comps), 4), dtype=complex)
    for i, j, nu in pairs:
        A, B = comps[i][0], comps[j][0]
        lin = np.sum(nu * B[1:]) if nu is not None else 0
        val = A[0] * B[0] + np.sum(A[1:] * B[1:] * (C - e)) + lin
        if abs(val) < 1e-300:
            raise DomainError(f"log argument vanishes on the bond ({i}, {j})")
        gA = np.concatenate([[B[0]], B[1:] * (C - e)])
        gB = np.concatenate([[A[0]], A[1:] * (C - e) + (nu if nu is not None else 0)])
        G[i] += gA / val
        G[j] += gB / val
    return G.ravel()


def hamiltonian_residual(state: ChainState, z, C=None, boundary_scale: float = BOUNDARY_SCALE) -> float:
    """|{H, h(z)}| relative to the sum of absolute contributions."""
    P = state.bracket_table(boundary_scale).tensor(state.flat())
    _, gz = transfer_gradient(state, z)
    return _relative_pairing(hamiltonian_gradient(state, C), P, gz)
