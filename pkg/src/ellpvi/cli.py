"""Batch command line: ``ellpvi --command <name> [options]``.

Reports list one row per check (name, residual, tolerance, pass flag, worst
sample).  Reports are byte-identical for identical configurations; wall-clock
timing goes to stderr only.  Exit status is 0 iff every check passes.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import verification as V
from .dynamics import FlowSpec, integrate
from .elliptic import ModularPoint

COMMANDS = ("identities", "integrate", "lax-check", "hecke-map", "poisson-check", "reflection-check", "chain-check",
            "crosscheck-pvi")
FLOWS = ("CI", "EPVI", "ZVG", "NAZVG", "ET", "NAET")
DIGITS = 17


class UsageError(ValueError):
    pass


def _complex_arg(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ellpvi", description="Run elliptic integrable-system verifications.")
    p.add_argument("--config", type=Path, help="JSON file with any of the options below (flags override it)")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--tau-re", type=float)
    p.add_argument("--tau-im", type=float)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=float, help="override the check tolerance (default: per-check acceptance values)")
    p.add_argument("--out", type=Path, help="report path (stdout when omitted)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--trajectory", type=Path, help="trajectory CSV path (default: report path with suffix .trajectory.csv)")
    p.add_argument("--samples", type=int, help="samples per case or point count")
    p.add_argument("--flow", choices=FLOWS, default="CI")
    p.add_argument("--s-end", type=float, default=1.0, help="integration length in the flow parameter")
    p.add_argument("--rtol", type=float, default=1e-12)
    p.add_argument("--direction", type=_complex_arg, default=0.05 + 0.03j, help="tau direction for tau-flows")
    p.add_argument("--u", type=_complex_arg, default=0.23 + 0.31j)
    p.add_argument("--v", type=_complex_arg, default=0.1 - 0.2j)
    for k in range(4):
        p.add_argument(f"--nu{k}", type=_complex_arg)
    for k in range(1, 4):
        p.add_argument(f"--s{k}", type=_complex_arg)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--sites", type=int, default=3)
    p.add_argument("--hbar-re", type=float, default=0.17)
    p.add_argument("--hbar-im", type=float, default=0.05)
    p.add_argument("--pvi", type=float, nargs=4, metavar=("ALPHA", "BETA", "GAMMA", "DELTA"),
                   default=[0.3, -0.2, 0.15, 0.1])
    return p


def parse_config(argv=None) -> argparse.Namespace:
    """Flags, with an optional JSON config supplying defaults; raises UsageError naming the field."""
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    if pre.config is not None:
        try:
            data = json.loads(pre.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config: cannot read {pre.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config: top level must be an object")
        known = {a.dest: a for a in parser._actions}
        for key, value in data.items():
            dest = key.replace("-", "_")
            if dest not in known or dest in ("help", "config"):
                raise UsageError(f"config: unknown field {key!r}")
            action = known[dest]
            if action.type is not None and value is not None and not isinstance(value, list):
                try:
                    value = action.type(value)
                except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config: field {key!r}: {exc}") from exc
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config: field {key!r} must be one of {list(action.choices)}")
            parser.set_defaults(**{dest: value})
    args = parser.parse_args(argv)
    validate(args)
    return args


def validate(args) -> None:
    if args.command is None:
        raise UsageError("command: required (--command or config field 'command')")
    if (args.tau_re is None) != (args.tau_im is None):
        raise UsageError("tau: give both --tau-re and --tau-im")
    if args.tau_im is not None and not args.tau_im > 0:
        raise UsageError(f"tau-im: Im tau must be positive, got {args.tau_im}")
    if args.tol is not None and not args.tol > 0:
        raise UsageError(f"tol: must be positive, got {args.tol}")
    if args.samples is not None and args.samples < 1:
        raise UsageError("samples: must be at least 1")
    if args.sites < 0:
        raise UsageError("sites: must be non-negative")
    if args.s_end <= 0:
        raise UsageError("s-end: must be positive")


def _tau(args, default=V.DEFAULT_TAU) -> complex:
    return default if args.tau_im is None else complex(args.tau_re, args.tau_im)


def _tol(args, value):
    return value if args.tol is None else args.tol


def _nu(args, default):
    given = [getattr(args, f"nu{k}") for k in range(4)]
    return np.array([d if g is None else g for g, d in zip(given, default)], dtype=complex)


def _spins(args, default):
    given = [getattr(args, f"s{k}") for k in range(1, 4)]
    return np.array([d if g is None else g for g, d in zip(given, default)], dtype=complex)


# ---------------------------------------------------------------------------
# commands: each returns (checks, trajectory header, trajectory rows)


def cmd_identities(args):
    taus = V.DEFAULT_TAUS if args.tau_im is None else (_tau(args),)
    checks = V.oracle_gate(seed=args.seed)
    if not V.all_passed(checks):
        return checks, None, None
    checks += V.identity_checks(args.samples or 100, _tol(args, 1e-9), args.seed, taus)
    return checks, None, None


def cmd_lax(args):
    t = args.tol
    return V.lax_checks(_tau(args), args.seed, args.samples or 20, t or 1e-9, t or 1e-8), None, None


def _trajectory_rows(traj):
    header = ["s", "tau_re", "tau_im"] + [f"y{i}_{p}" for i in range(len(traj.final)) for p in ("re", "im")]
    rows = []
    for s, y in zip(traj.s, traj.states):
        tau = traj.spec.tau_at(s) if traj.spec.is_tau_flow else complex(traj.spec.tau0)
        rows.append([s, tau.real, tau.imag] + [x for c in y for x in (c.real, c.imag)])
    return header, rows


def cmd_integrate(args):
    from .dynamics import casimir_quantity, ci_energy, conserved_report, zvg_energy

    tau = _tau(args)
    kind = args.flow
    tau_kw = dict(tau0=tau, direction=args.direction, kappa=args.kappa) if kind in ("EPVI", "NAZVG", "NAET") else dict(tau0=tau)
    if kind in ("CI", "EPVI"):
        spec = FlowSpec(kind, {"nu": _nu(args, [0.3, 0.2, 0.1j, 0.4])}, **tau_kw)
        y0 = [args.u, args.v]
    elif kind in ("ZVG", "NAZVG"):
        spec = FlowSpec(kind, {"nu_prime": _nu(args, [0.3, 0.1j, -0.2, 0])[:3]}, **tau_kw)
        y0 = _spins(args, [0.5, 0.3 + 0.2j, -0.4])
    else:
        rng = np.random.default_rng(args.seed)
        spec = FlowSpec(kind, {"N": 2}, **tau_kw)
        y0 = 0.3 * (rng.normal(size=3) + 1j * rng.normal(size=3))
    traj = integrate(spec, y0, args.s_end, rtol=args.rtol, atol=args.rtol * 1e-2)
    quantities = {}
    if kind in ("ZVG", "NAZVG"):
        quantities["casimir"] = (casimir_quantity, _tol(args, 1e-10))
    if kind == "ZVG":
        quantities["H"] = (zvg_energy(spec), _tol(args, 1e-8))
    if kind == "CI":
        quantities["H"] = (ci_energy(spec), _tol(args, 1e-8))
    drift = conserved_report(traj, {k: q for k, (q, _) in quantities.items()})["drift"]
    checks = [V.Check(f"conservation.{kind}.{k}", drift[k], tol) for k, (_, tol) in quantities.items()]
    checks.append(V.Check(f"integrate.{kind}.finite", 0.0 if np.all(np.isfinite(traj.final)) else np.inf, 1.0,
                          detail={"steps": len(traj.s)}))
    return (checks, *_trajectory_rows(traj))


def cmd_hecke(args):
    from .hecke import cm_to_zvg_coords, lax_data_from_epvi, pushforward_residual

    tau = _tau(args)
    nu = _nu(args, [0.3, 0.2, 0.1j, 0.4])
    checks = V.hecke_checks(tau, args.seed, _tol(args, 1e-6), _tol(args, 1e-5))
    traj = integrate(FlowSpec("CI", {"nu": nu}, tau0=tau), [args.u, args.v], args.s_end, rtol=args.rtol,
                     atol=args.rtol * 1e-2)
    checks.append(V.Check("hecke.CI_to_ZVG.user", pushforward_residual(traj, nu), _tol(args, 1e-6)))
    m = ModularPoint(tau)
    header = ["s", "u_re", "u_im", "v_re", "v_im"] + [f"S{a}_{p}" for a in (1, 2, 3) for p in ("re", "im")]
    rows = []
    for s, y in zip(traj.s, traj.states):
        S = cm_to_zvg_coords(*lax_data_from_epvi(y[0], y[1], nu, 1.0), 0.0, m).S
        rows.append([s, y[0].real, y[0].imag, y[1].real, y[1].imag] + [x for c in S for x in (c.real, c.imag)])
    return checks, header, rows


def cmd_poisson(args):
    t = args.tol
    return V.poisson_checks(_tau(args), args.seed, args.samples or 50, tol_jacobi=t or 1e-10, tol_casimir=t or 1e-10,
                            tol_reflection=t or 1e-9, tol_bihamiltonian=t or 1e-10), None, None


def cmd_reflection(args):
    t = args.tol
    return V.quantum_checks(_tau(args, 0.3 + 0.8j), complex(args.hbar_re, args.hbar_im), args.seed,
                            args.samples or 20, t or 1e-9, t or 1e-8, t or 1e-6), None, None


def cmd_chain(args):
    t = args.tol
    return V.chain_checks(_tau(args), args.seed, args.sites, args.samples or 10, t or 1e-7, t or 1e-6), None, None


def cmd_pvi(args):
    checks, rows = V.pvi_checks(*args.pvi, tau0=_tau(args, 0.1 + 1.0j), direction=args.direction, y0=(args.u, args.v),
                                s_end=args.s_end, tol=_tol(args, 1e-5))
    header = [f"{k}_{p}" for k in ("tau", "u", "du_dtau", "X", "t") for p in ("re", "im")] + ["pvi_residual"]
    out = []
    for r in rows:
        out.append([x for k in ("tau", "u", "du_dtau", "X", "t") for x in (complex(r[k]).real, complex(r[k]).imag)]
                   + [float(r["pvi_residual"])])
    return checks, header, out


HANDLERS = {"identities": cmd_identities, "integrate": cmd_integrate, "lax-check": cmd_lax, "hecke-map": cmd_hecke,
            "poisson-check": cmd_poisson, "reflection-check": cmd_reflection, "chain-check": cmd_chain,
            "crosscheck-pvi": cmd_pvi}


# ---------------------------------------------------------------------------
# serialization


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{DIGITS - 1}e}"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    return x


def render_report(command: str, args, checks, error: str | None = None, fmt: str = "json") -> str:
    rows = [c.as_dict() for c in checks]
    if fmt == "json":
        config = {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "out", "trajectory", "format")}
        doc = {"command": command, "config": config, "passed": error is None and V.all_passed(checks),
               "error": error, "checks": rows}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True, default=str) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "residual", "tolerance", "negative_control", "passed", "detail"])
    for c in checks:
        w.writerow([c.name, _fmt(c.residual), _fmt(c.tolerance), _fmt(c.negative_control), _fmt(c.passed),
                    json.dumps(_jsonable(c.detail), sort_keys=True)])
    if error is not None:
        w.writerow(["error", "", "", "", "false", error])
    return buf.getvalue()


def render_trajectory(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def run(args) -> int:
    """Execute one configured command; returns the exit status."""
    start = time.perf_counter()
    checks, header, rows, error = [], None, None, None
    try:
        checks, header, rows = HANDLERS[args.command](args)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    report = render_report(args.command, args, checks, error, args.format)
    if args.out is None:
        sys.stdout.write(report)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(report)
    if header is not None:
        path = args.trajectory or (args.out.with_suffix(".trajectory.csv") if args.out is not None else None)
        if path is not None:
            path.write_text(render_trajectory(header, rows))
    ok = error is None and V.all_passed(checks)
    for c in checks:
        if not c.passed:
            print(f"FAIL {c.name}: residual {c.residual:.3e} (tolerance {c.tolerance:.1e})", file=sys.stderr)
    print(f"{args.command}: {'pass' if ok else 'FAIL'} ({len(checks)} checks, {time.perf_counter() - start:.2f} s)",
          file=sys.stderr)
    return 0 if ok else 1


def main(argv=None) -> int:
    try:
        args = parse_config(argv)
    except UsageError as exc:
        print(f"ellpvi: usage error: {exc}", file=sys.stderr)
        return 2
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
