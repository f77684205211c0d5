"""Command line entry point: ``outwave <subcommand> ...``.

Exit codes are 0 when every verdict passes, 1 when any verdict fails and 2
for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import choquet as cq
from .experiments import (ConfigError, ExperimentReport, Scenario, SweepConfig, emit_report,
                          load_scenario, run_experiment, run_shell_sweep)
from .grid_core import RadialField, StatePair, read_field_csv, write_spacetime_csv
from .norms import norm_report
from .projections import is_outgoing, outgoing_velocity, project

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def parse_eps(text: str) -> list[float]:
    """'2^-4..2^-9' -> [2^-4, ..., 2^-9]; a comma list of numbers also works."""
    m = re.fullmatch(r"\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        step = 1 if b >= a else -1
        return [2.0**k for k in range(a, b + step, step)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse eps list {text!r}") from None


def _read_csv(path) -> RadialField:
    try:
        return read_field_csv(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read field CSV {path}: {exc}") from None


def _dump(doc, path=None):
    text = json.dumps(doc, indent=2, sort_keys=True, default=_default)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def _finish(rep: ExperimentReport, out) -> int:
    if out:
        emit_report(rep, out)
    for v in rep.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'}  {v.criterion}  value={v.value:.6g}  tol={v.tolerance:g} {v.units}")
    for e in rep.errors:
        print(f"ERROR  {e}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# subcommands

def cmd_verify(args) -> int:
    from . import verify
    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = verify.run(only)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_shell_sweep(args) -> int:
    cfg = SweepConfig(horizon=args.horizon, cells_per_shell=args.cells)
    rep = run_shell_sweep(args.N, args.alpha, args.L, parse_eps(args.eps), cfg,
                          picard=not args.no_picard)
    for key, fit in rep.fits.items():
        print(f"{key}: slope {fit.slope:.4f} +- {fit.half_width:.4f}")
    return _finish(rep, args.out)


def cmd_simulate(args) -> int:
    if args.scenario:
        sc = load_scenario(args.scenario)
        for key in ("N", "sign", "T", "dt", "method"):
            val = getattr(args, key)
            if val is not None:
                sc.solver[key] = val
        return _finish(run_experiment(sc), args.out)
    solver = {k: v for k, v in {"N": args.N, "sign": args.sign, "T": args.T, "dt": args.dt,
                                "grid_n": args.grid_n, "r_max": args.rmax,
                                "method": args.method or "both"}.items() if v is not None}
    if args.linear:
        solver["coupling"] = 0.0
    diags = ["smallness", "dispersion", "reference", "energy"]
    if args.data:
        return _simulate_csv(args, solver, diags)
    sc = Scenario("cli", "outgoing_shell", {}, solver, diags)
    return _finish(run_experiment(sc), args.out)


def _simulate_csv(args, solver, diags) -> int:
    from .nonlinear import SolverConfig, picard_solve, reference_solve
    u0 = _read_csv(args.data)
    vel = outgoing_velocity(u0) if args.outgoing else RadialField(u0.grid, np.zeros(u0.grid.n))
    s = StatePair(u0, vel)
    try:
        cfg = SolverConfig(N=int(solver.get("N", 6)), sign=solver.get("sign", 1),
                           T=float(solver.get("T", 2.0)), dt=float(solver.get("dt", u0.grid.h)),
                           grid=u0.grid, coupling=float(solver.get("coupling", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    method = solver.get("method", "both")
    if method in ("picard", "both"):
        u, trace = picard_solve(s, None, cfg)
        write_spacetime_csv(u, out / "picard.csv")
        _dump(trace.to_dict(), out / "picard_trace.json")
    if method in ("fd", "both"):
        write_spacetime_csv(reference_solve(s, cfg), out / "reference.csv")
    return EXIT_OK


def cmd_project(args) -> int:
    u0 = _read_csv(args.data)
    vel = _read_csv(args.vel) if args.vel else RadialField(u0.grid, np.zeros(u0.grid.n))
    s = StatePair(u0, vel)
    res = project(s)
    ok, mismatch = is_outgoing(s, args.tol)
    _dump({"residual": res.residual, "outgoing": ok, "outgoing_mismatch": mismatch,
           "warnings": list(res.warnings)})
    return EXIT_OK


def _norm_specs(items):
    specs = []
    for item in items:
        kind, _, rest = item.partition(":")
        prm = {}
        for kv in filter(None, rest.split(",")):
            k, _, v = kv.partition("=")
            prm[k] = math.inf if v == "inf" else float(v)
        specs.append((kind, prm))
    return specs


def cmd_norms(args) -> int:
    u = _read_csv(args.data)
    try:
        rep = norm_report(u, _norm_specs(args.spec))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad norm spec: {exc}") from None
    _dump(rep.to_dict())
    return EXIT_OK


def bumps_from_json(doc) -> cq.BumpFunction:
    items = doc["bumps"] if isinstance(doc, dict) else doc
    bumps = []
    for b in items:
        try:
            prof = cq.profile_from_spec(b.get("profile", "gaussian"), float(b.get("scale", 1.0)))
            bumps.append(cq.Bump(tuple(b["center"]), float(b.get("coeff", 1.0)), prof))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad bump entry {b!r}: {exc}") from None
    return cq.BumpFunction(tuple(bumps))


def choquet_report(f: cq.BumpFunction, alpha: float, p: float, q, params: cq.ChoquetParams) -> dict:
    dist = cq.distribution(f, params)
    weighted = dist.levels * dist.measures ** (1 / p) if dist.levels.size else np.zeros(0)
    rep = {"alpha": alpha, "p": p, "q": "inf" if q == math.inf else q,
           "lorentz_choquet": cq._lorentz_from_distribution(dist, p, q),
           "L^{p,inf}": cq._lorentz_from_distribution(dist, p, math.inf),
           "levels": dist.levels.tolist(), "measures": dist.measures.tolist()}
    if weighted.size:
        k = int(np.argmax(weighted))
        _, centre = cq.outer_measure(cq.level_set(f, float(dist.levels[k])), params)
        rep["attaining_level"] = float(dist.levels[k])
        rep["argmax_center"] = np.asarray(centre).tolist()
    if alpha < 3:
        kato, y = cq.kato_norm_argmax(f, alpha / p, p, q, params)
        rep["kato_norm"] = kato
        rep["kato_argmax_center"] = np.asarray(y).tolist()
    return rep


def cmd_choquet(args) -> int:
    text = Path(args.bumps).read_text() if args.bumps and Path(args.bumps).exists() else args.bumps
    if not text:
        raise ConfigError("choquet needs --bumps (JSON file or inline JSON)")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid bump JSON: {exc}") from None
    f = bumps_from_json(doc)
    q = math.inf if args.q in ("inf", "infinity") else float(args.q)
    params = cq.ChoquetParams(alpha=args.alpha, levels_per_octave=args.levels,
                              lattice_spacing=args.lattice_spacing)
    _dump(choquet_report(f, args.alpha, args.p, q, params), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="outwave", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--only", help="comma list of criterion numbers")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("shell-sweep", help="thin-shell eps sweep")
    p.add_argument("--N", type=int, default=6)
    p.add_argument("--alpha", type=float, default=1 / 9)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--eps", default="2^-4..2^-9")
    p.add_argument("--horizon", type=float, default=3.0)
    p.add_argument("--cells", type=int, default=8, help="grid cells across the shell")
    p.add_argument("--no-picard", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_shell_sweep)

    p = sub.add_parser("simulate", help="run a scenario or a CSV initial profile")
    p.add_argument("--scenario")
    p.add_argument("--method", choices=("picard", "fd", "both", "none"))
    p.add_argument("--N", type=int)
    p.add_argument("--sign")
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--rmax", type=float)
    p.add_argument("--data", help="CSV with columns r,value for u0")
    p.add_argument("--outgoing", action="store_true", help="attach the outgoing velocity to --data")
    p.add_argument("--linear", action="store_true", help="switch the nonlinearity off")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("project", help="outgoing/incoming split of a CSV pair")
    p.add_argument("--data", required=True)
    p.add_argument("--vel")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(fn=cmd_project)

    p = sub.add_parser("norms", help="norm report of a CSV field")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", action="append", default=[],
                   help="e.g. Lp:p=4, Lorentz:p=9,q=2, Hdot:s=1")
    p.set_defaults(fn=cmd_norms)

    p = sub.add_parser("choquet", help="Lorentz-Choquet and Kato norms of a bump list")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", default="inf")
    p.add_argument("--levels", type=int, default=8, help="levels per octave")
    p.add_argument("--lattice-spacing", type=float, default=0.5)
    p.add_argument("--bumps", help="JSON file or inline JSON list of bumps")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_choquet)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
