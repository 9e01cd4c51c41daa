"""Adaptive integration of the autonomous and isomonodromic flows.

State vectors are complex numpy arrays.  Autonomous flows run in a real time
``t``; tau-flows follow the straight path ``tau(s) = tau0 + s d`` and the
returned trajectory carries both ``s`` and ``tau``.

Layouts:

* ``PVI_RATIONAL``: (X, dX/dt) along ``t(s) = t0 + s d``.
* ``EPVI`` / ``CI``: (u, du/dtau) resp. (u, du/dt) for
  ``u'' = -sum nu_a^2 wp'(u + omega_a)``.
* ``CM_SPIN``: (u_1..u_N, v_1..v_N, p row-major).
* ``ET`` / ``NAET``: reduced T-basis coefficients of sl(N).
* ``ZVG`` / ``NAZVG``: (S_1, S_2, S_3) for ``S' = S x J S + S x nu'``.

Isomonodromic kinds carry the level ``kappa``: ``kappa d_tau X = F(X; tau)``
(for EPVI this is absorbed into ``u'' = ...``, which is kappa-free).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution

from .algebra import SlnBasis
from .elliptic import E2, DomainError, ModularPoint, PoleError, dE2, IM_TAU_FLOOR
from .flows import (
    cm_rhs,
    gyro_inertia,
    gyro_rhs_flow_frame,
    nu_prime_from_tilde,
    top_rhs,
)

KINDS = ("PVI_RATIONAL", "EPVI", "CI", "CM_SPIN", "ET", "NAET", "ZVG", "NAZVG")
TAU_KINDS = ("EPVI", "NAET", "NAZVG")
DEFAULT_TAU_FLOOR = 0.2
_SOLVERS = {"RK45": RK45, "DOP853": DOP853}


class SingularityError(ArithmeticError):
    """Integration stopped at a (movable) singularity; carries the last good point."""

    def __init__(self, message, s, state):
        super().__init__(message)
        self.s = s
        self.state = state


@dataclass(frozen=True)
class FlowSpec:
    """What to integrate.

    ``params`` keys by kind: ``alpha, beta, gamma, delta, t0, direction`` (PVI_RATIONAL);
    ``nu`` (EPVI, CI); ``N`` (ET, NAET); ``nu_prime`` or ``nu_tilde`` and ``J_convention``
    (ZVG, NAZVG).  tau-flows use ``tau0`` and ``direction``; autonomous flows use ``tau``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    tau0: complex = 1j
    direction: complex = 1.0
    kappa: complex = 1.0
    tau_floor: float = DEFAULT_TAU_FLOOR

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown flow kind {self.kind!r}")
        if self.kind in TAU_KINDS and self.kappa == 0:
            raise DomainError("tau-flows need kappa != 0")

    @property
    def is_tau_flow(self) -> bool:
        return self.kind in TAU_KINDS

    def tau_at(self, s) -> complex:
        return complex(self.tau0 + s * self.direction)

    def modular_point(self, s) -> ModularPoint:
        tau = self.tau_at(s) if self.is_tau_flow else complex(self.tau0)
        if tau.imag < (self.tau_floor if self.is_tau_flow else IM_TAU_FLOOR):
            raise DomainError(f"tau path left the floor Im tau >= {self.tau_floor}: tau={tau!r}")
        return ModularPoint(tau)


def _gyro_nu_prime(spec: FlowSpec, m: ModularPoint) -> np.ndarray:
    p = spec.params
    if "nu_tilde" in p:
        # constants attached to the Lax matrix; the flow-frame nu' is 2i times the Lax-frame one
        return 2j * nu_prime_from_tilde(p["nu_tilde"], m)
    return np.asarray(p.get("nu_prime", np.zeros(3)), dtype=complex)


def pvi_rhs(t, X, dX, alpha, beta, gamma, delta) -> complex:
    """Second derivative of X from the rational sixth Painleve equation."""
    first = 0.5 * (1 / X + 1 / (X - 1) + 1 / (X - t)) * dX * dX
    second = -(1 / t + 1 / (t - 1) + 1 / (X - t)) * dX
    pot = X * (X - 1) * (X - t) / (t * t * (t - 1) ** 2) * (
        alpha + beta * t / X ** 2 + gamma * (t - 1) / (X - 1) ** 2 + delta * t * (t - 1) / (X - t) ** 2
    )
    return first + second + pot


def epvi_acceleration(u, nu, m: ModularPoint) -> complex:
    """-sum nu_a^2 wp'(u + omega_a)."""
    nu = np.asarray(nu, dtype=complex)
    return -sum(nu[a] ** 2 * dE2(u + m.omega[a], m) for a in range(4))


def vector_field(spec: FlowSpec) -> Callable[[float, np.ndarray], np.ndarray]:
    """d(state)/ds for a FlowSpec (s is time for autonomous kinds, path parameter for tau-flows)."""
    kind = spec.kind
    p = spec.params
    d = spec.direction
    kap = spec.kappa
    m_fixed = None if spec.is_tau_flow or kind == "PVI_RATIONAL" else spec.modular_point(0.0)

    if kind == "PVI_RATIONAL":
        a, b, g, dl = (p[k] for k in ("alpha", "beta", "gamma", "delta"))
        t0 = complex(p.get("t0", 0.5))
        dt = complex(p.get("direction", 1.0))

        def f(s, y):
            t = t0 + s * dt
            return np.array([y[1] * dt, pvi_rhs(t, y[0], y[1], a, b, g, dl) * dt])

        return f
    if kind in ("EPVI", "CI"):
        nu = np.asarray(p["nu"], dtype=complex)

        def f(s, y):
            m = m_fixed or spec.modular_point(s)
            scale = d if kind == "EPVI" else 1.0
            return np.array([y[1] * scale, epvi_acceleration(y[0], nu, m) * scale])

        return f
    if kind == "CM_SPIN":
        N = int(p["N"])

        def f(s, y):
            u, v, pm = y[:N], y[N:2 * N], y[2 * N:].reshape(N, N)
            du, dv, dp = cm_rhs(u, v, pm, m_fixed)
            return np.concatenate([du, dv, dp.ravel()])

        return f
    if kind in ("ET", "NAET"):
        basis = SlnBasis(int(p.get("N", 2)))

        def f(s, y):
            if kind == "ET":
                return top_rhs(y, m_fixed, basis)
            return top_rhs(y, spec.modular_point(s), basis) * d / kap

        return f
    conv = p.get("J_convention", "E2")
    if kind == "ZVG":
        J = gyro_inertia(m_fixed, conv)
        nup = _gyro_nu_prime(spec, m_fixed)

        def f(s, y):
            return gyro_rhs_flow_frame(y, nup, J)

        return f

    def f(s, y):  # NAZVG
        m = spec.modular_point(s)
        return gyro_rhs_flow_frame(y, _gyro_nu_prime(spec, m), gyro_inertia(m, conv)) * d / kap

    return f


@dataclass
class Trajectory:
    """Accepted steps of one integration."""

    spec: FlowSpec
    s: np.ndarray
    states: np.ndarray
    step_sizes: np.ndarray
    error_estimates: np.ndarray
    dense: Optional[OdeSolution] = None

    @property
    def taus(self) -> np.ndarray:
        if self.spec.is_tau_flow:
            return np.array([self.spec.tau_at(x) for x in self.s])
        return np.full(len(self.s), complex(self.spec.tau0))

    def at(self, s) -> np.ndarray:
        if self.dense is None:
            raise DomainError("trajectory has no dense output")
        return self.dense(s)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def records(self):
        """One dict per accepted step (complex values as (re, im) pairs)."""
        out = []
        for s, tau, y, h, err in zip(self.s, self.taus, self.states, self.step_sizes, self.error_estimates):
            out.append({"s": float(s), "tau": [tau.real, tau.imag],
                        "state": [[c.real, c.imag] for c in y], "step": float(h), "error": float(err)})
        return out


def integrate(spec: FlowSpec, y0, s_end: float, rtol: float = 1e-10, atol: float = 1e-12,
              method: str = "DOP853", max_step: float = math.inf, first_step=None,
              max_steps: int = 200000) -> Trajectory:
    """Integrate from s = 0 to ``s_end`` with an embedded Runge-Kutta pair (scipy)."""
    if method not in _SOLVERS:
        raise DomainError(f"method must be one of {sorted(_SOLVERS)}")
    f = vector_field(spec)
    y0 = np.asarray(y0, dtype=complex)
    if spec.is_tau_flow:
        spec.modular_point(s_end)
    try:
        solver = _SOLVERS[method](f, 0.0, y0, s_end, rtol=rtol, atol=atol, max_step=max_step,
                                  first_step=first_step)
    except PoleError as exc:
        raise SingularityError(f"initial state is singular: {exc}", 0.0, y0) from exc
    ss, ys, hs, errs, interps = [0.0], [y0.copy()], [0.0], [0.0], []
    last_scale = float(np.abs(y0).max()) + 1.0
    for _ in range(max_steps):
        if solver.status != "running":
            break
        try:
            msg = solver.step()
        except PoleError as exc:
            raise SingularityError(f"hit a pole: {exc}", ss[-1], ys[-1]) from exc
        if solver.status == "failed":
            raise SingularityError(f"step-size underflow ({msg})", ss[-1], ys[-1])
        y = solver.y
        if not np.all(np.isfinite(y)) or np.abs(y).max() > 1e12 * last_scale:
            raise SingularityError("solution blew up (movable pole)", ss[-1], ys[-1])
        h = solver.t - solver.t_old
        interps.append(solver.dense_output())
        ss.append(solver.t)
        ys.append(y.copy())
        hs.append(h)
        errs.append(_error_estimate(solver, h))
    else:
        raise SingularityError("step budget exhausted", ss[-1], ys[-1])
    dense = OdeSolution(np.array(ss), interps) if interps else None
    return Trajectory(spec, np.array(ss), np.array(ys), np.array(hs), np.array(errs), dense)


def _error_estimate(solver, h) -> float:
    # the embedded-pair error norm is only exposed through a private hook; report nan otherwise
    est = getattr(solver, "_estimate_error_norm", None)
    if est is None or getattr(solver, "K", None) is None:
        return float("nan")
    scale = solver.atol + np.maximum(np.abs(solver.y_old), np.abs(solver.y)) * solver.rtol
    try:
        return float(est(solver.K, h, scale))
    except Exception:  # noqa: BLE001 - diagnostics only
        return float("nan")


# ---------------------------------------------------------------------------
# conserved quantities


def conserved_report(traj: Trajectory, quantities: dict) -> dict:
    """Max drift |Q(s) - Q(0)| of each quantity along the accepted steps.

    For tau-flows conservation is not expected except for Casimirs; the report is
    informational and flags ``autonomous`` accordingly.
    """
    out = {"autonomous": not traj.spec.is_tau_flow, "drift": {}}
    for name, q in quantities.items():
        vals = [q(s, y) for s, y in zip(traj.s, traj.states)]
        out["drift"][name] = float(max(abs(v - vals[0]) for v in vals))
    return out


def casimir_quantity(s, y) -> complex:
    return complex(np.sum(np.asarray(y[:3]) ** 2))


def ci_energy(spec: FlowSpec):
    """H = v^2/2 + sum nu_a^2 wp(u + omega_a) for the CI flow."""
    m = spec.modular_point(0.0)
    nu = np.asarray(spec.params["nu"], dtype=complex)

    def H(s, y):
        return 0.5 * y[1] ** 2 + sum(nu[a] ** 2 * E2(y[0] + m.omega[a], m) for a in range(4))

    return H


def zvg_energy(spec: FlowSpec):
    """Flow-frame gyrostat energy sum (J_a S_a^2 + 2 nu'_a S_a)."""
    m = spec.modular_point(0.0)
    J = gyro_inertia(m, spec.params.get("J_convention", "E2"))
    nup = _gyro_nu_prime(spec, m)

    def H(s, y):
        y = np.asarray(y)
        return complex(np.sum(J * y ** 2 + 2 * nup * y))

    return H


def lax_trace_quantity(builder, z0):
    """tr L(z0)^2 for a state-to-Lax-matrix builder."""

    def q(s, y):
        A = builder(y)(z0)
        return complex(np.trace(A @ A))

    return q


# ---------------------------------------------------------------------------
# the PVI cross-check


PVI_READINGS = ("scaled", "literal", "squared")


def pvi_nu_from_parameters(alpha, beta, gamma, delta, reading: str = "scaled") -> np.ndarray:
    """Constants nu_a of u'' = -sum nu_a^2 wp'(u + omega_a) from (alpha, beta, gamma, delta).

    ``a = (alpha, -beta, gamma, 1/2 - delta)``; readings:
    ``scaled``: (2 pi nu_a)^2 = a_a; ``literal``: nu_a = a_a; ``squared``: nu_a^2 = a_a.
    """
    a = np.array([alpha, -beta, gamma, 0.5 - delta], dtype=complex)
    if reading == "scaled":
        return np.sqrt(a + 0j) / (2 * math.pi)
    if reading == "literal":
        return a
    if reading == "squared":
        return np.sqrt(a + 0j)
    raise DomainError(f"reading must be one of {PVI_READINGS}")


def elliptic_to_rational(u, m: ModularPoint):
    """(X, t) = ((E2(u) - e1) / (e2 - e1), (e3 - e1) / (e2 - e1)) with e_a = E2(omega_a)."""
    e1, e2, e3 = m.e_values[1:]
    if abs(e2 - e1) < 1e-14:
        raise DomainError("branch degeneracy: e2 = e1")
    return (E2(u, m) - e1) / (e2 - e1), (e3 - e1) / (e2 - e1)


def tau_from_t(t_target, tau_guess, tol=1e-13, max_iter=50) -> complex:
    """Invert t(tau) locally by Newton's method (analytic d_tau of E2(omega_a))."""
    from .elliptic import E2_dtau, dE2 as _dE2

    tau = complex(tau_guess)
    for _ in range(max_iter):
        m = ModularPoint(tau)
        e = m.e_values[1:]
        de = []
        for a, w in enumerate(m.omega[1:], start=1):
            de.append(E2_dtau(w, m) + _dE2(w, m) * m.domega[a])
        num, den = e[2] - e[0], e[1] - e[0]
        t = num / den
        dt = ((de[2] - de[0]) * den - num * (de[1] - de[0])) / den ** 2
        step = (t - t_target) / dt
        tau -= step
        if abs(step) < tol:
            break
    return tau


@dataclass
class PVIReport:
    max_residual: float
    rows: list
    inversion_error: float
    reading: str

    def as_dict(self):
        return {"max_residual": self.max_residual, "inversion_error": self.inversion_error,
                "reading": self.reading, "rows": self.rows}


def pvi_crosscheck(traj: Trajectory, alpha, beta, gamma, delta, n_points: int = 9,
                   h: float = 1e-3, margin: float = 0.1, reading: str = "scaled") -> PVIReport:
    """Map an EPVI trajectory to (X, t) and evaluate the rational PVI residual.

    Derivatives along the path are 5-point central differences of the dense output;
    dX/dt and d^2X/dt^2 follow by the chain rule in the path parameter.  The residual
    is relative to max(|X''|, |rhs|).
    """
    spec = traj.spec
    if spec.kind != "EPVI":
        raise DomainError("pvi_crosscheck needs an EPVI trajectory")
    s0, s1 = traj.s[0], traj.s[-1]
    span = s1 - s0
    pts = np.linspace(s0 + margin * span, s1 - margin * span, n_points)

    def Xt(s):
        m = spec.modular_point(s)
        return elliptic_to_rational(traj.at(s)[0], m)

    rows, worst, inv_err = [], 0.0, 0.0
    for s in pts:
        vals = [Xt(s + k * h) for k in (-2, -1, 0, 1, 2)]
        X = [x for x, _ in vals]
        T = [t for _, t in vals]
        dX = (X[0] - 8 * X[1] + 8 * X[3] - X[4]) / (12 * h)
        dT = (T[0] - 8 * T[1] + 8 * T[3] - T[4]) / (12 * h)
        d2X = (-X[0] + 16 * X[1] - 30 * X[2] + 16 * X[3] - X[4]) / (12 * h * h)
        d2T = (-T[0] + 16 * T[1] - 30 * T[2] + 16 * T[3] - T[4]) / (12 * h * h)
        x, t = X[2], T[2]
        Xp = dX / dT
        Xpp = (d2X - Xp * d2T) / dT ** 2
        rhs = pvi_rhs(t, x, Xp, alpha, beta, gamma, delta)
        r = abs(Xpp - rhs) / max(abs(Xpp), abs(rhs), 1e-300)
        worst = max(worst, r)
        tau = spec.tau_at(s)
        inv_err = max(inv_err, abs(tau_from_t(t, tau + 0.01) - tau))
        y = traj.at(s)
        rows.append({"tau": tau, "u": y[0], "du_dtau": y[1], "X": x, "t": t, "pvi_residual": r})
    return PVIReport(worst, rows, inv_err, reading)


# ---------------------------------------------------------------------------
# numerical studies


def order_study(spec: FlowSpec, y0, s_end: float, steps=(32, 64, 128, 256), method: str = "RK45"):
    """End-state error of fixed-step runs against a tight reference; returns (steps, errors, slope).

    The fixed step is enforced by capping ``max_step`` with a very loose tolerance, so the
    embedded pair never rejects; the slope of log(error) against log(step) is the order.
    """
    ref = integrate(spec, y0, s_end, rtol=1e-13, atol=1e-15, method="DOP853").final
    errs = []
    for n in steps:
        h = s_end / n
        tr = integrate(spec, y0, s_end, rtol=1e3, atol=1e3, method=method, max_step=h, first_step=h)
        errs.append(float(np.abs(tr.final - ref).max()))
    hs = np.array([s_end / n for n in steps])
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return list(steps), errs, slope


def kappa_limit_study(S0, nu_prime, tau0, T: float = 1.0, kappas=(1e-1, 1e-2, 1e-3),
                      rtol: float = 1e-11, atol: float = 1e-13):
    """Distance between NAZVG in rescaled time t = (tau - tau0)/kappa and ZVG frozen at tau0."""
    zvg = FlowSpec("ZVG", {"nu_prime": nu_prime}, tau0=tau0)
    target = integrate(zvg, S0, T, rtol=rtol, atol=atol).final
    errs = []
    for k in kappas:
        na = FlowSpec("NAZVG", {"nu_prime": nu_prime}, tau0=tau0, direction=1.0, kappa=k)
        errs.append(float(np.abs(integrate(na, S0, k * T, rtol=rtol, atol=atol).final - target).max()))
    return list(kappas), errs
