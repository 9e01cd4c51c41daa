"""Registry of functional identities between theta functions and elliptic kernels.

Each case maps a tuple of complex parameters to one or more *groups*; a group is
a pair ``(lhs_terms, rhs_terms)`` of summand lists.  The residual of a group is
``sum(lhs) - sum(rhs)`` and it is normalized by the largest summand modulus.
Cases quantified over cyclic permutations ``(alpha, beta, gamma)`` of the sigma
labels return one group per permutation.

Sampling draws points uniformly from the fundamental cell and rejects a draw
whenever any kernel evaluation comes within ``reject_distance`` of its pole set;
this is implemented by evaluating on ``m.guarded(reject_distance)``, so every
regularity check inside the elliptic layer doubles as the rejection rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .algebra import cyclic
from .elliptic import (
    E1,
    E2,
    ModularPoint,
    PoleError,
    e,
    jacobi_theta,
    phi,
    sl2_domega,
    sl2_omega,
    theta,
    varphi_sl2,
    varphi_sl2_eta,
    weierstrass_zeta,
)

Group = tuple[list, list]

DEFAULT_TAUS = (0.3 + 0.8j, 1j, 0.1 + 1.7j)
REJECT_DISTANCE = 0.05


@dataclass(frozen=True)
class IdentityCase:
    id: str
    arity: int
    sampler: str
    groups: Callable[[Sequence[complex], ModularPoint], list[Group]] = field(repr=False)
    note: str = ""

    def evaluate(self, params, m: ModularPoint) -> tuple[complex, float]:
        """(residual, relative residual) maximized over the case's groups."""
        worst_abs, worst_rel, worst_val = -1.0, 0.0, 0j
        for lhs, rhs in self.groups(params, m):
            terms = list(lhs) + list(rhs)
            value = sum(lhs) - sum(rhs)
            scale = max((abs(t) for t in terms), default=0.0)
            rel = abs(value) / scale if scale > 0 else abs(value)
            if rel > worst_rel or worst_abs < 0:
                worst_abs, worst_rel, worst_val = abs(value), rel, value
        return worst_val, worst_rel


def _cyc():
    return [(a, *cyclic(a)) for a in (1, 2, 3)]


# -- Fay, Calogero and inversion relations ------------------------------------------


def _ad3(p, m):
    u1, u2, z1, z2 = p
    f = lambda u, z: phi(u, z, m)
    return [([f(u1, z1) * f(u2, z2)], [f(u1 + u2, z1) * f(u2, z2 - z1), f(u1 + u2, z2) * f(u1, z1 - z2)])]


def _ad2(p, m):
    u, v, z = p
    lhs = [phi(u, z, m) * phi(v, z, m, du_order=1), -phi(v, z, m) * phi(u, z, m, du_order=1)]
    uv = phi(u + v, z, m)
    return [(lhs, [E2(u, m) * uv, -E2(v, m) * uv])]


def _zeta_combo(u1, u2, v, m):
    zt = lambda x: weierstrass_zeta(x, m)
    return [zt(v), -zt(u1 - u2 - v), zt(u1 - v), -zt(u2 + v)]


def _ir(p, m):
    u1, u2, v, z, w = p
    f = lambda u, x: phi(u, x, m)
    lhs = [f(v, z - w) * f(u1 - v, z) * f(u2 + v, w), -f(u1 - u2 - v, z - w) * f(u2 + v, z) * f(u1 - v, w)]
    pre = f(u1, z) * f(u2, w)
    return [(lhs, [pre * t for t in _zeta_combo(u1, u2, v, m)])]


def _ir3(p, m):
    u1, u2, v = p
    args = (u1, u2, u2 - u1 + 2 * v, u1 - v, u2 + v, u2 - u1 + v, v)
    for k, a in enumerate(args):
        m.check_regular(a, f"theta argument {k}")
    t = [theta(a, m) for a in args]
    rhs = m.theta_prime0 * t[0] * t[1] * t[2] / (t[3] * t[4] * t[5] * t[6])
    return [(_zeta_combo(u1, u2, v, m), [rhs])]


# -- theta duplication -------------------------------------------------------------


def _kz1(line):
    def groups(p, m):
        x, y = p
        m2 = ModularPoint(2 * m.tau)
        th = lambda k, z, mm=m: jacobi_theta(k, z, mm)
        if line == 1:
            return [([th(4, x) * th(3, y), th(4, y) * th(3, x)], [2 * th(4, x + y, m2) * th(4, x - y, m2)])]
        if line == 2:
            return [([th(4, x) * th(3, y), -th(4, y) * th(3, x)], [2 * th(1, x + y, m2) * th(1, x - y, m2)])]
        if line == 3:
            return [([th(3, x) * th(3, y), th(4, y) * th(4, x)], [2 * th(3, x + y, m2) * th(3, x - y, m2)])]
        return [([th(3, x) * th(3, y), -th(4, y) * th(4, x)], [2 * th(2, x + y, m2) * th(2, x - y, m2)])]

    return groups


def _kz2(line):
    def groups(p, m):
        x, y = p
        m2 = ModularPoint(2 * m.tau)
        th = lambda k, z, mm=m: jacobi_theta(k, z, mm)
        a, b = (x + y) / 2, (x - y) / 2
        if line == 1:
            return [([2 * th(1, x, m2) * th(4, y, m2)], [th(1, a) * th(2, b), th(2, a) * th(1, b)])]
        if line == 2:
            return [([2 * th(3, x, m2) * th(2, y, m2)], [th(1, a) * th(1, b), th(2, a) * th(2, b)])]
        if line == 3:
            return [([2 * th(3, x, m2) * th(3, y, m2)], [th(3, a) * th(3, b), th(4, a) * th(4, b)])]
        return [([2 * th(2, x, m2) * th(2, y, m2)], [th(3, a) * th(3, b), -th(4, a) * th(4, b)])]

    return groups


# -- sl(2) kernels ------------------------------------------------------------------


def _efi02(p, m):
    (z,) = p
    out = []
    for a in (1, 2, 3):
        w = sl2_omega(a, m)
        lhs = varphi_sl2(a, z, m) * varphi_sl2(a, z - w, m)
        rhs = -e(-w * sl2_domega(a)) * (m.theta_prime0 / theta(w, m)) ** 2
        out.append(([lhs], [rhs]))
    return out


def _sc(p, m):
    (z,) = p
    out = []
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            lhs = varphi_sl2(a, -z - sl2_omega(b, m), m)
            if a == b:
                out.append(([lhs], [-varphi_sl2(a, z - sl2_omega(a, m), m)]))
            else:
                out.append(([lhs], [varphi_sl2(a, z - sl2_omega(b, m), m)]))
    return out


def _kernels(m):
    V = lambda a, eta, z: varphi_sl2_eta(a, eta, z, m)
    V0 = lambda a, z: varphi_sl2(a, z, m)
    W = lambda a: sl2_omega(a, m)
    return V, V0, W


def _efi21(p, m):
    z, w, eta = p
    V, V0, _ = _kernels(m)
    out = []
    for al, _, _ in _cyc():
        lhs = [phi(w, eta, m) * V(al, eta, z - w), phi(-w, eta, m) * V(al, eta, z + w)]
        pz = phi(z, eta, m)
        out.append((lhs, [pz * V0(al, z - w), pz * V0(al, z + w)]))
    return out


def _pair_products(V, z, w, eta):
    return lambda a, b: V(a, eta, z - w) * V(b, eta, z + w)


def _efi13_16(which):
    def groups(p, m):
        z, w, eta = p
        V, _, _ = _kernels(m)
        P = _pair_products(V, z, w, eta)
        out = []
        for al, be, ga in _cyc():
            if which == 13:
                lhs = [P(0, 0), P(al, al), P(be, be), P(ga, ga)]
                rhs = [2 * V(0, 2 * eta, z - w) * V(0, w, 2 * eta), 2 * V(0, 2 * eta, z + w) * V(0, -w, 2 * eta)]
            elif which == 14:
                lhs = [P(0, 0), P(al, al), -P(be, be), -P(ga, ga)]
                rhs = [2 * V(0, 2 * eta, z - w) * V(al, w, 2 * eta), 2 * V(0, 2 * eta, z + w) * V(al, -w, 2 * eta)]
            elif which == 15:
                lhs = [P(be, 0), -P(0, be), -P(al, ga), P(ga, al)]
                rhs = [2 * V(be, 2 * eta, z - w) * V(al, w, 2 * eta), -2 * V(be, 2 * eta, z + w) * V(al, -w, 2 * eta)]
            else:
                lhs = [P(be, ga), P(ga, be), -P(al, 0), -P(0, al)]
                rhs = [-2 * V(al, 2 * eta, z - w) * V(al, w, 2 * eta), -2 * V(al, 2 * eta, z + w) * V(al, -w, 2 * eta)]
            out.append((lhs, rhs))
        return out

    return groups


def _efi6(sign):
    def groups(p, m):
        z, w, eta = p
        V, _, _ = _kernels(m)
        s = z + sign * w
        out = []
        for al, be, ga in _cyc():
            lhs = [V(be, eta, s) * V(ga, eta, z) * V(0, eta, w), sign * V(al, eta, s) * V(0, eta, z) * V(ga, eta, w)]
            rhs = [sign * V(0, eta, s) * V(al, eta, z) * V(be, eta, w), V(ga, eta, s) * V(be, eta, z) * V(al, eta, w)]
            out.append((lhs, rhs))
        return out

    return groups


def _efi7(p, m):
    z, w, eta = p
    V, _, W = _kernels(m)
    E = lambda x: E1(x, m)
    out = []
    for al, be, ga in _cyc():
        c1 = E(eta + W(be)) + E(eta - W(be)) - E(eta + W(al)) - E(eta - W(al))
        c2 = E(eta + W(ga)) + E(eta - W(ga)) - 2 * E(eta)
        lhs = [c1 * V(ga, eta, z + w) * V(ga, eta, z) * V(0, eta, w), -c1 * V(0, eta, z + w) * V(0, eta, z) * V(ga, eta, w)]
        rhs = [-c2 * V(al, eta, z + w) * V(al, eta, z) * V(be, eta, w), c2 * V(be, eta, z + w) * V(be, eta, z) * V(al, eta, w)]
        out.append((lhs, rhs))
    return out


def _efi8_block(V, W, z, w, eta, al, be, shift):
    """phi-free factor of the efi8 block: X(z -/+ w) for one cyclic pair."""
    return [
        -V(al, eta, z - W(al)) * V(be, eta, w - W(be)) * V(al, eta, z + shift),
        V(be, eta, z - W(be)) * V(al, eta, w - W(al)) * V(be, eta, z + shift),
    ]


def _efi8(p, m):
    z, w, eta = p
    V, _, W = _kernels(m)
    out = []
    for al, be, _ in _cyc():
        lhs = [V(0, eta, w) * t for t in _efi8_block(V, W, z, w, eta, al, be, -w)]
        rhs = [V(0, -eta, w) * t for t in _efi8_block(V, W, z, w, eta, al, be, w)]
        out.append((lhs, rhs))
    return out


def _efi9(p, m):
    z, w, eta = p
    V, _, W = _kernels(m)
    out = []
    for al, be, ga in _cyc():
        a = V(0, eta, w + W(al))
        b = V(0, eta, -w + W(al))
        lhs = [a * V(ga, eta, z - W(ga)) * V(0, eta, w) * V(be, eta, z - w), -a * V(0, eta, z) * V(ga, eta, w - W(ga)) * V(al, eta, z - w)]
        rhs = [b * V(ga, eta, z - W(ga)) * V(0, eta, w) * V(be, eta, z + w), b * V(0, eta, z) * V(ga, eta, w - W(ga)) * V(al, eta, z + w)]
        out.append((lhs, rhs))
    return out


# -- reflection-equation bookkeeping ------------------------------------------------


def reflection_K(alpha: int, hbar, m: ModularPoint) -> complex:
    """K_alpha = E1(hbar + omega_alpha) - E1(hbar) - E1(omega_alpha)."""
    w = sl2_omega(alpha, m)
    return E1(hbar + w, m) - E1(hbar, m) - E1(w, m)


def reflection_rho(alpha: int, hbar, m: ModularPoint) -> complex:
    """rho_alpha = -e(-omega_alpha d_tau omega_alpha) phi(omega_alpha + hbar, -omega_alpha)."""
    w = sl2_omega(alpha, m)
    return -e(-w * sl2_domega(alpha)) * phi(w + hbar, -w, m)


def _w40(p, m):
    """Block multiplying [nu_a, nu_b]_+ : vanishes identically."""
    z, w, h = p
    V, _, W = _kernels(m)
    out = []
    for al, be, _ in _cyc():
        terms = []
        for pref, s in ((2 * phi(w, h, m), -w), (2 * phi(-w, h, m), w)):
            terms += [pref * t for t in _efi8_block(V, W, z, w, h, al, be, s)]
        out.append((terms, []))
    return out


def _w401_blocks(z, w, h, m, al, be, ga):
    V, _, W = _kernels(m)
    pw, pmw = phi(w, h, m), phi(-w, h, m)
    A = [
        2 * V(ga, h, z) * V(0, h, w) * (pw * V(ga, h, z - w) + pmw * V(ga, h, z + w)),
        -2 * V(0, h, z) * V(ga, h, w) * (pw * V(0, h, z - w) + pmw * V(0, h, z + w)),
    ]

    def pair(x, y, zx, wy):
        return [
            V(x, h, z - zx) * V(y, h, w - wy) * (V(x, h, z - w) * pw + V(x, h, z + w) * pmw),
        ]

    B = pair(al, be, W(al), 0) + [-t for t in pair(be, al, 0, W(al))]
    C = pair(al, be, 0, W(be)) + [-t for t in pair(be, al, W(be), 0)]
    D = [-2 * t for t in pair(al, be, 0, 0)] + [2 * t for t in pair(be, al, 0, 0)]
    return A, B, C, D


def _w401(p, m):
    """Coefficient match after inserting the exchange relation for [S_gamma, S_0]."""
    z, w, h = p
    out = []
    for ga in (1, 2, 3):
        al, be = cyclic(ga)
        A, B, C, D = _w401_blocks(z, w, h, m, al, be, ga)
        Ka, Kb, Kg = (reflection_K(x, h, m) for x in (al, be, ga))
        ra, rb = reflection_rho(al, h, m), reflection_rho(be, h, m)
        c = (Kb - Ka) / Kg
        out.append(([c * t for t in A], D))
        out.append((B, [-ra / (2 * Kg) * t for t in A]))
        out.append((C, [rb / (2 * Kg) * t for t in A]))
    return out


def _w402(p, m):
    """Same match after dividing by 2 phi(z, hbar) via the addition rule for varphi."""
    z, w, h = p
    V, V0, W = _kernels(m)
    out = []
    for ga in (1, 2, 3):
        al, be = cyclic(ga)
        s = lambda a: V0(a, z - w) + V0(a, z + w)
        A = [
            V(ga, h, z) * V(0, h, w) * s(ga),
            -V(ga, h, w) * (V(0, h, w) * V(0, h, z - w) + V(0, h, -w) * V(0, h, z + w)),
        ]
        B = [V(al, h, z - W(al)) * V(be, h, w) * s(al), -V(be, h, z) * V(al, h, w - W(al)) * s(be)]
        C = [V(al, h, z) * V(be, h, w - W(be)) * s(al), -V(be, h, z - W(be)) * V(al, h, w) * s(be)]
        D = [-V(al, h, z) * V(be, h, w) * s(al), V(be, h, z) * V(al, h, w) * s(be)]
        Ka, Kb, Kg = (reflection_K(x, h, m) for x in (al, be, ga))
        ra, rb = reflection_rho(al, h, m), reflection_rho(be, h, m)
        out.append(([(Kb - Ka) / Kg * t for t in A], D))
        out.append((B, [-ra / Kg * t for t in A]))
        out.append((C, [rb / Kg * t for t in A]))
    return out


# -- registry ----------------------------------------------------------------------------

_Z3 = "z, w, eta regular; z +- w, shifted by half periods, regular"

REGISTRY: dict[str, IdentityCase] = {
    c.id: c
    for c in [
        IdentityCase("ad3", 4, "u1, u2, z1, z2, u1+u2, z1-z2 regular", _ad3, "Fay three-term relation"),
        IdentityCase("ad2", 3, "u, v, z, u+v regular", _ad2, "Calogero functional equation"),
        IdentityCase("ir", 5, "u1, u2, v, z, w and their differences regular", _ir),
        IdentityCase("ir3", 3, "u1, u2, v and the theta arguments regular", _ir3),
        *[IdentityCase(f"kz1.{k}", 2, "x, y anywhere (entire)", _kz1(k)) for k in (1, 2, 3, 4)],
        *[IdentityCase(f"kz2.{k}", 2, "x, y anywhere (entire)", _kz2(k)) for k in (1, 2, 3, 4)],
        IdentityCase("efi02", 1, "z off the lattice and its half-period shifts", _efi02),
        IdentityCase("sc", 1, "z off the lattice and its half-period shifts", _sc),
        IdentityCase("efi21", 3, _Z3, _efi21),
        IdentityCase("efi13", 3, _Z3, _efi13_16(13)),
        IdentityCase("efi14", 3, _Z3, _efi13_16(14)),
        IdentityCase("efi15", 3, _Z3, _efi13_16(15)),
        IdentityCase("efi16", 3, _Z3, _efi13_16(16)),
        IdentityCase("efi6", 3, _Z3, _efi6(+1)),
        IdentityCase("efi61", 3, _Z3, _efi6(-1)),
        IdentityCase("efi7", 3, _Z3, _efi7),
        IdentityCase("efi8", 3, _Z3, _efi8),
        IdentityCase("efi9", 3, _Z3, _efi9),
        IdentityCase("w40", 3, "z, w, hbar regular", _w40, "nu~ nu~ block of the reflection equation"),
        IdentityCase("w401", 3, "z, w, hbar regular", _w401, "coefficient match in the 1 x sigma channel"),
        IdentityCase("w402", 3, "z, w, hbar regular", _w402, "reduced coefficient match"),
    ]
}


def get_case(case) -> IdentityCase:
    if isinstance(case, IdentityCase):
        return case
    try:
        return REGISTRY[case]
    except KeyError:
        raise KeyError(f"unknown identity case {case!r}") from None


def residual(case, params, m: ModularPoint) -> complex:
    """LHS - RHS of the worst group (PoleError propagates with the offending argument named)."""
    return get_case(case).evaluate(params, m)[0]


def relative_residual(case, params, m: ModularPoint) -> float:
    return get_case(case).evaluate(params, m)[1]


def mutated(case, factor: complex = -1.0) -> IdentityCase:
    """Corrupt a case by scaling its right-hand side (harness mutation check)."""
    base = get_case(case)

    def groups(p, m):
        return [(lhs, [factor * t for t in rhs] if rhs else [factor * 0.5 * t for t in lhs]) for lhs, rhs in base.groups(p, m)]

    return replace(base, id=base.id + "~mutated", groups=groups)


def sample_point(rng: np.random.Generator, m: ModularPoint) -> complex:
    a, b = rng.random(2)
    return complex(a) + complex(b) * m.tau


@dataclass
class CaseReport:
    id: str
    tau: complex
    max_relative: float
    worst_point: tuple
    passed: bool
    samples: int
    rejected: int

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "tau": [self.tau.real, self.tau.imag],
            "max_relative_residual": self.max_relative,
            "worst_point": [[z.real, z.imag] for z in self.worst_point],
            "passed": self.passed,
            "samples": self.samples,
            "rejected": self.rejected,
        }


def check_case(case, m: ModularPoint, samples: int, tol: float, rng: np.random.Generator,
               reject_distance: float = REJECT_DISTANCE, max_tries: int = 200) -> CaseReport:
    c = get_case(case)
    guarded = m.guarded(reject_distance)
    worst, worst_pt, rejected = 0.0, (), 0
    for _ in range(samples):
        for _ in range(max_tries):
            params = tuple(sample_point(rng, m) for _ in range(c.arity))
            try:
                _, rel = c.evaluate(params, guarded)
                break
            except PoleError:
                rejected += 1
        else:
            raise RuntimeError(f"{c.id}: no regular sample found in {max_tries} draws")
        if not math.isfinite(rel):
            rel = math.inf
        if rel >= worst:
            worst, worst_pt = rel, params
    return CaseReport(c.id, m.tau, worst, worst_pt, worst < tol, samples, rejected)


def run_suite(samples_per_case: int = 100, tol: float = 1e-9, seed: int = 42,
              taus: Sequence[complex] = DEFAULT_TAUS, cases=None) -> list[CaseReport]:
    """Seeded sweep of the registry; failures are report entries, not exceptions."""
    if samples_per_case < 1:
        raise ValueError("samples_per_case must be at least 1")
    chosen = [get_case(c) for c in (cases if cases is not None else REGISTRY)]
    reports = []
    for ti, tau in enumerate(taus):
        m = ModularPoint(tau)
        for ci, c in enumerate(chosen):
            rng = np.random.default_rng([seed, ti, ci])
            reports.append(check_case(c, m, samples_per_case, tol, rng))
    return reports
