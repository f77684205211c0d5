"""Initial-data families, the thin-shell sweep and the scenario runner.

A scenario is a declarative TOML file with three tables::

    [scenario]     kind and data parameters
    [solver]       N, sign, horizon, grid, method
    [diagnostics]  list = ["smallness", "dispersion", ...]

``run_experiment`` turns it into an :class:`ExperimentReport`, and
``emit_report`` writes report.json, series.csv and plotdata/*.csv.
"""

from __future__ import annotations

import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.special import erf

from . import choquet as cq
from .freeflow import DuhamelStream, outgoing_closed_form
from .grid_core import RadialField, RadialGrid, SpaceTimeField, StatePair
from .nonlinear import (BlowUp, SolverConfig, parse_sign, picard_solve,
                        reference_solve)
from .norms import (critical_indices, energy, gradient_norm, japanese, lp_norm,
                    mixed_norm, strichartz_ratio, weighted_l1t, weighted_sup)
from .projections import is_outgoing, outgoing_velocity, project

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA = "outwave-report/1"


class ConfigError(ValueError):
    """Invalid scenario or solver configuration."""


# ---------------------------------------------------------------------------
# profiles

def erf_window(r, a: float, b: float, width: float) -> np.ndarray:
    """Smoothed indicator of [a, b]; half height at a and b, edge scale ``width``."""
    return 0.5 * (erf((r - a) / width) - erf((r - b) / width))


def c1_window(r, a: float, b: float, width: float) -> np.ndarray:
    """Indicator of [a, b] with cubic C^1 ramps of total width ``width``
    centred on the endpoints."""
    def ramp(x):
        s = np.clip(x / width + 0.5, 0.0, 1.0)
        return s * s * (3 - 2 * s)
    return ramp(r - a) * ramp(b - r)


SHELL_VARIANTS = ("erf", "c1", "sharp")


def shell_profile(grid: RadialGrid, a: float, b: float, height: float,
                  width: float = 0.0, variant: str = "erf") -> RadialField:
    r = grid.r
    if variant == "sharp" or width == 0:
        vals = ((r >= a - 1e-12) & (r <= b + 1e-12)).astype(float)
    elif variant == "erf":
        vals = erf_window(r, a, b, width / 4)
    elif variant == "c1":
        vals = c1_window(r, a, b, width)
    else:
        raise ConfigError(f"unknown shell variant {variant!r}; expected one of {SHELL_VARIANTS}")
    return RadialField(grid, height * vals)


def outgoing_pair(u0: RadialField) -> StatePair:
    return StatePair(u0, outgoing_velocity(u0))


def make_outgoing_shell(L: float, eps: float, alpha: float, ramp: float = 0.25,
                        grid: RadialGrid | None = None, variant: str = "erf",
                        inner: float = 1.0) -> StatePair:
    """Height L*eps^(-alpha) on [inner, inner + eps], outgoing velocity."""
    if not 0 < eps < 1:
        raise ConfigError("shell needs 0 < eps < 1")
    if not 0 <= ramp <= 0.25:
        raise ConfigError("ramp must lie in [0, 1/4] (in units of eps)")
    if grid is None:
        grid = RadialGrid.with_spacing(eps / 64, inner + eps + 4)
    u0 = shell_profile(grid, inner, inner + eps, L * eps ** (-alpha), ramp * eps, variant)
    if variant == "sharp":
        return StatePair(u0, RadialField(grid, np.zeros(grid.n)))
    return outgoing_pair(u0)


@dataclass(frozen=True, eq=False)
class FarSupportData:
    state: StatePair
    smallness: float


def make_far_support(profile: RadialField, R: float, N: int = 6,
                     grid: RadialGrid | None = None) -> FarSupportData:
    """Translate ``profile`` from [0, width] to [R, R + width] and attach the
    outgoing velocity; smallness = ||u0||_{H^1}^2 R^(4/N - 1)."""
    width = profile.grid.r_max
    if grid is None:
        grid = RadialGrid.with_spacing(profile.grid.h, R + width + 1)
    vals = np.interp(grid.r - R, profile.grid.r, profile.samples, left=0.0, right=0.0)
    u0 = RadialField(grid, vals)
    if not np.any(vals):
        return FarSupportData(StatePair.zeros(grid), 0.0)
    return FarSupportData(outgoing_pair(u0), gradient_norm(u0) ** 2 * R ** (4 / N - 1))


def make_bounded_ball(amp: float, R: float, grid: RadialGrid | None = None,
                      width: float = 0.0) -> StatePair:
    """amp on B(0, R) (erf-smoothed edge when width > 0), zero velocity."""
    if grid is None:
        grid = RadialGrid.with_spacing(R / 256, 2 * R + 4)
    r = grid.r
    vals = 0.5 * (1 - erf((r - R) / (width / 4))) if width > 0 else (r <= R).astype(float)
    return StatePair(RadialField(grid, amp * vals), RadialField(grid, np.zeros(grid.n)))


def make_multiscale(phi, psi, scales, N: int, grid: RadialGrid) -> StatePair:
    """sum_j lam_j^(-2/N) phi(r/lam_j) and lam_j^(-2/N-1) psi(r/lam_j)."""
    scales = np.asarray(scales, dtype=float)
    if np.any(np.diff(scales) <= 0):
        raise ConfigError("scales must be increasing")
    r = grid.r
    u0 = sum(lam ** (-2 / N) * phi(r / lam) for lam in scales)
    u1 = sum(lam ** (-2 / N - 1) * psi(r / lam) for lam in scales)
    return StatePair(RadialField(grid, u0), RadialField(grid, u1))


@dataclass(frozen=True, eq=False)
class MultibumpData:
    u0: cq.BumpFunction
    u1: cq.BumpFunction
    radial: bool
    criterion: float


def make_multibump(phi, psi, centers, alpha: float = 0.6) -> MultibumpData:
    """Translated copies of (phi, psi).  Only data centred at the origin can
    be fed to the radial solvers; everything else is for the Choquet norms."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    u0 = cq.BumpFunction(tuple(cq.Bump(c, 1.0, phi) for c in centers))
    u1 = cq.BumpFunction(tuple(cq.Bump(c, 1.0, psi) for c in centers))
    radial = bool(np.allclose(centers, 0.0))
    S = cq.separation_criterion(centers, alpha) if len(centers) > 1 else 0.0
    return MultibumpData(u0, u1, radial, S)


def critical_smallness(u0: RadialField, N: int) -> float:
    """K = ||u0||_{H^1}^(4/N) ||u0||_inf^(1-4/N)."""
    return gradient_norm(u0) ** (4 / N) * lp_norm(u0, math.inf) ** (1 - 4 / N)


# ---------------------------------------------------------------------------
# reports

@dataclass
class Verdict:
    criterion: str
    passed: bool
    value: float
    tolerance: float
    units: str = ""
    detail: str = ""


@dataclass
class FitResult:
    slope: float
    intercept: float
    half_width: float
    n: int

    def contains(self, target: float, slack: float) -> bool:
        return abs(self.slope - target) <= slack


def ols_fit(x, y) -> FitResult:
    """Least-squares line with the half-width of the 95% band on the slope."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    res = stats.linregress(x, y)
    dof = x.size - 2
    hw = float(stats.t.ppf(0.975, dof) * res.stderr) if dof > 0 else math.inf
    return FitResult(float(res.slope), float(res.intercept), hw, int(x.size))


@dataclass
class ExperimentReport:
    scenario: dict
    values: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    def value(self, name: str, x, units: str = "", feeds: str = "") -> None:
        self.values[name] = {"value": _jsonable(x), "units": units, "criterion": feeds}

    def verdict(self, criterion, passed, value, tolerance, units="", detail="") -> Verdict:
        v = Verdict(criterion, bool(passed), float(value), float(tolerance), units, detail)
        self.verdicts.append(v)
        return v

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts) and not self.errors

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "scenario": _jsonable(self.scenario),
            "provenance": _jsonable(self.provenance),
            "values": _jsonable(self.values),
            "fits": {k: _jsonable(asdict(v)) for k, v in self.fits.items()},
            "traces": _jsonable(self.traces),
            "verdicts": [_jsonable(asdict(v)) for v in self.verdicts],
            "errors": list(self.errors),
            "passed": self.passed,
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("infinite" if x > 0 else "-infinite" if x < 0 else "nan")
    return x


def emit_report(report: ExperimentReport, out_dir) -> dict:
    """Write report.json, series.csv and plotdata/<name>.csv under ``out_dir``."""
    out = Path(out_dir)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc["created"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    paths = {"report": out / "report.json", "series": out / "series.csv"}
    paths["report"].write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    cols = list(report.series)
    with open(paths["series"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        length = max((len(report.series[c]) for c in cols), default=0)
        for i in range(length):
            w.writerow([_cell(report.series[c], i) for c in cols])
    for name, rows in report.plots.items():
        p = out / "plotdata" / f"{name}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "series"])
            for x, y, s in rows:
                w.writerow([repr(float(x)), repr(float(y)), s])
        paths[f"plot:{name}"] = p
    return paths


def _cell(col, i):
    if i >= len(col):
        return ""
    v = col[i]
    return repr(float(v)) if isinstance(v, (float, np.floating, int, np.integer)) else v


# ---------------------------------------------------------------------------
# thin-shell sweep

@dataclass(frozen=True)
class SweepConfig:
    """Settings for :func:`run_shell_sweep`.  The grid spacing is
    eps/cells_per_shell so both shell edges are nodes and every time step
    dt = h shifts the closed-form solution by exactly one node."""
    horizon: float = 3.0
    cells_per_shell: int = 8
    picard_eps: float = 2.0**-5
    picard_horizon: float = 7.5
    picard_cells: tuple = (8, 16)
    sign: int = 1
    tol: float = 1e-10
    max_iter: int = 40
    largeness_radii: tuple = (2.0, 4.0, 8.0)
    largeness_fraction: float = 0.1
    slope_slack: float = 0.1


def _shell_grid(eps, cells, horizon, inner=1.0):
    h = eps / cells
    grid = RadialGrid.with_spacing(h, inner + eps + horizon + 4 * h)
    k1 = int(round(inner / h))
    k2 = int(round((inner + eps) / h))
    return grid, k1, k2


def _shift_outgoing(u0, j, r):
    """Closed-form outgoing evolution after j whole grid steps."""
    v = np.zeros_like(u0)
    if j < u0.size:
        v[j:] = u0[:u0.size - j]
        v[1:] *= (r[1:] - r[j]) / r[1:]
        v[:j + 1] = 0.0 if j else v[:1]
    return v


def shell_duhamel_norms(N: int, alpha: float, L: float, eps: float,
                        horizon: float = 3.0, cells: int = 8) -> dict:
    """Weighted norms of the Duhamel integral of v^(N+1), where v is the
    closed-form outgoing evolution of the sharp shell L eps^(-alpha) on
    [1, 1 + eps].  Streams over time without storing the space-time field."""
    grid, k1, k2 = _shell_grid(eps, cells, horizon)
    h, r = grid.h, grid.r
    u0 = np.zeros(grid.n)
    u0[k1:k2 + 1] = L * eps ** (-alpha)
    steps = int(round(horizon / h))
    stream = DuhamelStream(grid, h)
    jr = japanese(r)
    wsup, l1 = 0.0, np.zeros(grid.n)
    for j in range(steps + 1):
        v = _shift_outgoing(u0, j, r)
        w = stream.push(v ** (N + 1))
        aw = np.abs(w)
        wsup = max(wsup, float(np.max(jr * aw)))
        l1 += (0.5 if j in (0, steps) else 1.0) * h * aw
    return {"eps": eps, "h": h, "n": grid.n, "steps": steps,
            "weighted_sup": wsup, "weighted_l1t": float(np.max(jr * l1)),
            "data_sup": L * eps ** (-alpha),
            "data_lpc": _shell_lpc(L, eps, alpha, N)}


def _shell_lpc(L, eps, alpha, N):
    """L^{p_c} norm of the sharp shell, computed exactly."""
    pc = 1.5 * N
    vol = 4 * math.pi / 3 * ((1 + eps) ** 3 - 1)
    return L * eps ** (-alpha) * vol ** (1 / pc)


def shell_picard(N: int, alpha: float, L: float, eps: float, cfg: SweepConfig,
                 cells: int) -> dict:
    """Full Picard solve for the sharp shell with the plain power
    nonlinearity, plus sup_t u(r, t) at the sampled radii."""
    grid, k1, k2 = _shell_grid(eps, cells, cfg.picard_horizon)
    r = grid.r
    u0 = np.zeros(grid.n)
    u0[k1:k2 + 1] = L * eps ** (-alpha)
    scfg = SolverConfig(N=N, sign=cfg.sign, T=cfg.picard_horizon, dt=grid.h, grid=grid,
                        max_iter=cfg.max_iter, tol=cfg.tol, plain_power=True)
    v = np.stack([_shift_outgoing(u0, j, r) for j in range(scfg.steps + 1)], axis=1)
    data = StatePair(RadialField(grid, u0), RadialField(grid, np.zeros(grid.n)))
    u, trace = picard_solve(data, None, scfg, v_free=v)
    peaks = {}
    for rad in cfg.largeness_radii:
        k = int(round(rad / grid.h))
        sup_t = float(np.max(u.samples[k]))
        peaks[rad] = {"sup_t_u": sup_t, "constant": sup_t * float(japanese(rad)) / L}
    return {"eps": eps, "cells": cells, "h": grid.h, "trace": trace.to_dict(),
            "converged": trace.converged, "largeness": peaks}


def run_shell_sweep(N: int, alpha: float, L: float, eps_list, cfg: SweepConfig | None = None,
                    picard: bool = True) -> ExperimentReport:
    cfg = cfg or SweepConfig()
    eps_list = sorted(float(e) for e in eps_list)
    if not alpha < 1 / (N + 1):
        warn = f"alpha={alpha:.4g} is outside the contraction regime alpha < 1/(N+1)"
    else:
        warn = ""
    rep = ExperimentReport(scenario={"kind": "shell_sweep", "N": N, "alpha": alpha, "L": L,
                                     "eps": eps_list, "variant": "sharp",
                                     "sweep": asdict(cfg)})
    if warn:
        rep.errors.append(warn)
    rows = [shell_duhamel_norms(N, alpha, L, e, cfg.horizon, cfg.cells_per_shell) for e in eps_list]
    rep.traces["sweep"] = rows
    x = np.log([r["eps"] for r in rows])
    target = 1 - (N + 1) * alpha
    for key in ("weighted_sup", "weighted_l1t"):
        fit = ols_fit(x, np.log([r[key] for r in rows]))
        rep.fits[key] = fit
        rep.plots[key] = [(r["eps"], r[key], key) for r in rows]
    fit = rep.fits["weighted_sup"]
    rep.value("target_slope", target, "dimensionless", "9")
    rep.verdict("9:shell-eps-scaling", abs(fit.slope - target) <= cfg.slope_slack,
                fit.slope, cfg.slope_slack, "log-log slope",
                f"target {target:.4f}, 95% half-width {fit.half_width:.3g}")
    pc = 1.5 * N
    lpc = [r["data_lpc"] for r in rows]
    rep.value("data_Lpc", lpc, "L^{p_c} norm", "9")
    rep.value("smallness eps^(1/(N+1))*||u0||_inf",
              [r["eps"] ** (1 / (N + 1)) * r["data_sup"] for r in rows], "dimensionless", "9")
    rep.series = {"eps": [r["eps"] for r in rows],
                  "weighted_sup": [r["weighted_sup"] for r in rows],
                  "weighted_l1t": [r["weighted_l1t"] for r in rows],
                  "data_Lpc": lpc}
    rep.provenance = {"grids": [{"h": r["h"], "n": r["n"], "steps": r["steps"]} for r in rows],
                      "p_c": pc, "nonlinearity": "u^(N+1)"}
    if picard:
        runs = []
        for cells in cfg.picard_cells:
            try:
                runs.append(shell_picard(N, alpha, L, cfg.picard_eps, cfg, cells))
            except (BlowUp, MemoryError) as exc:
                rep.errors.append(f"picard (cells={cells}): {exc}")
        rep.traces["picard"] = runs
        if runs:
            conv = all(run["converged"] for run in runs)
            rep.verdict("9:shell-picard-converges", conv, float(conv), 1.0, "flag",
                        f"eps={cfg.picard_eps:g}")
            first = runs[0]
            for rad, info in first["largeness"].items():
                floor = cfg.largeness_fraction * L / float(japanese(rad))
                rep.verdict(f"9:largeness r={rad:g}", info["sup_t_u"] >= floor,
                            info["sup_t_u"], floor, "amplitude",
                            f"measured constant {info['constant']:.4g}")
            if len(runs) > 1:
                drift = max(abs(runs[-1]["largeness"][rad]["constant"] / info["constant"] - 1)
                            for rad, info in first["largeness"].items())
                rep.value("largeness_constant_refinement_drift", drift, "relative", "9")
    return rep


# ---------------------------------------------------------------------------
# scenarios

SCENARIO_KINDS = ("outgoing_shell", "far_support", "bounded_ball", "multiscale",
                  "multibump", "shell_sweep")
DIAGNOSTICS = ("smallness", "dispersion", "energy", "strichartz", "projection",
               "reference", "largeness", "choquet")


@dataclass
class Scenario:
    label: str
    kind: str
    params: dict
    solver: dict
    diagnostics: list

    def echo(self) -> dict:
        return {"label": self.label, "kind": self.kind, "params": self.params,
                "solver": self.solver, "diagnostics": self.diagnostics}


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        sc = dict(doc["scenario"])
    except (KeyError, TypeError):
        raise ConfigError("missing [scenario] table") from None
    kind = sc.pop("kind", None)
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
    label = str(sc.pop("label", kind))
    diags = doc.get("diagnostics", {}).get("list", [])
    bad = [d for d in diags if d not in DIAGNOSTICS]
    if bad:
        raise ConfigError(f"unknown diagnostics {bad}; expected a subset of {DIAGNOSTICS}")
    solver = dict(doc.get("solver", {}))
    if "sign" in solver:
        try:
            solver["sign"] = parse_sign(solver["sign"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return Scenario(label, kind, sc, solver, list(diags))


def load_scenario(path) -> Scenario:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    return scenario_from_dict(doc)


def _solver_config(sc: Scenario, grid: RadialGrid) -> SolverConfig:
    s = sc.solver
    dt = float(s.get("dt", grid.h * s.get("cfl", 1.0)))
    try:
        return SolverConfig(N=int(s.get("N", 6)), sign=s.get("sign", 1), T=float(s.get("T", 2.0)),
                            dt=dt, grid=grid, max_iter=int(s.get("max_iter", 60)),
                            tol=float(s.get("tol", 1e-10)),
                            plain_power=bool(s.get("plain_power", False)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _grid(sc: Scenario, default_rmax: float) -> RadialGrid:
    s = sc.solver
    n = int(s.get("grid_n", 2049))
    return RadialGrid(float(s.get("r_max", default_rmax)), n)


def _build_radial(sc: Scenario, rep: ExperimentReport):
    p = sc.params
    N = int(sc.solver.get("N", 6))
    T = float(sc.solver.get("T", 2.0))
    if sc.kind == "outgoing_shell":
        a, b = float(p.get("inner", 2.0)), float(p.get("outer", 3.0))
        grid = _grid(sc, b + T + 2)
        variant = p.get("variant", "erf")
        u0 = shell_profile(grid, a, b, float(p.get("amplitude", 0.016)), float(p.get("width", 0.25)),
                           variant)
        rep.value("profile_variant", variant)
        rep.value("smallness K", critical_smallness(u0, N), "dimensionless", "7")
        return outgoing_pair(u0)
    if sc.kind == "far_support":
        R = float(p.get("R", 8.0))
        width = float(p.get("width", 1.0))
        grid = _grid(sc, R + width + T + 2)
        prof_grid = RadialGrid.with_spacing(grid.h, width)
        prof = RadialField(prof_grid, float(p.get("amplitude", 0.05))
                           * erf_window(prof_grid.r, 0.25 * width, 0.75 * width, 0.15 * width))
        data = make_far_support(prof, R, N, grid)
        rep.value("profile_variant", "erf")
        rep.value("smallness ||u0||_H1^2 R^(4/N-1)", data.smallness, "dimensionless", "far_support")
        rep.value("bound scale ||u0||_H1 R^(2/N-1/2)",
                  gradient_norm(data.state.pos) * R ** (2 / N - 0.5), "amplitude", "far_support")
        return data.state
    if sc.kind == "bounded_ball":
        R = float(p.get("R", 1.0))
        amp = float(p.get("amplitude", 0.05))
        grid = _grid(sc, R + T + 3)
        s = make_bounded_ball(amp, R, grid, float(p.get("width", 0.2)))
        rep.value("profile_variant", "erf")
        rep.value("smallness ||u0||_inf R^(2/N)", amp * R ** (2 / N), "dimensionless", "bounded")
        return s
    if sc.kind == "multiscale":
        scales = [float(x) for x in p.get("scales", [1.0, 8.0, 64.0])]
        amp = float(p.get("amplitude", 0.05))
        grid = _grid(sc, 5 * scales[-1] + T + 2)

        def phi(x):
            return amp * np.exp(-((x - 2.0) / 0.5) ** 2)

        def psi(x):
            return np.zeros_like(x)

        s = make_multiscale(phi, psi, scales, N, grid)
        pc = 1.5 * N
        base = lp_norm(RadialField(grid, phi(grid.r)), pc) ** pc
        rep.value("Lpc^pc / (J * phi^pc)", lp_norm(s.pos, pc) ** pc / (len(scales) * base),
                  "dimensionless", "multiscale")
        rep.value("smallness K", critical_smallness(s.pos, N), "dimensionless", "7")
        return s
    raise ConfigError(f"scenario kind {sc.kind!r} has no radial data")


def _run_multibump(sc: Scenario, rep: ExperimentReport) -> None:
    p = sc.params
    alpha = float(p.get("alpha", 0.6))
    pexp = float(p.get("p", 8.0))
    centers = np.asarray(p.get("centers", [[0, 0, 0], [640, 0, 0]]), dtype=float)
    prof = cq.profile_from_spec(p.get("profile", "gaussian"), float(p.get("scale", 1.0)))
    data = make_multibump(prof, prof, centers, alpha)
    rep.value("smallness S", data.criterion, "dimensionless", "13")
    rep.value("radial", data.radial)
    if "choquet" in sc.diagnostics:
        params = cq.ChoquetParams(alpha=alpha)
        res = cq.multibump_smallness(centers, prof, float(p.get("eps", 1.0)), pexp, alpha, params)
        rep.value("L^{p,inf}(mu_alpha) multibump", res.norm, "quasinorm", "13")
        rep.value("L^{p,inf}(mu_alpha) single", res.single_norm, "quasinorm", "13")
        ratio = res.norm / res.single_norm
        if data.criterion <= 0.1:
            rep.verdict("13:multibump", ratio <= 1.5, ratio, 1.5, "ratio to single bump")


def run_experiment(sc: Scenario) -> ExperimentReport:
    """Dispatch a scenario to the solvers and diagnostics.  Solver failures
    are recorded in the report rather than raised."""
    rep = ExperimentReport(scenario=sc.echo())
    if sc.kind == "shell_sweep":
        p = sc.params
        eps = p.get("eps", [2.0**-k for k in range(4, 10)])
        cfg = SweepConfig(**{k: v for k, v in p.items() if k in SweepConfig.__dataclass_fields__})
        sweep = run_shell_sweep(int(sc.solver.get("N", 6)), float(p.get("alpha", 1 / 9)),
                                float(p.get("L", 1.0)), eps, cfg,
                                picard="largeness" in sc.diagnostics)
        sweep.scenario = sc.echo()
        return sweep
    if sc.kind == "multibump":
        _run_multibump(sc, rep)
        return rep
    s = _build_radial(sc, rep)
    grid = s.grid
    cfg = _solver_config(sc, grid)
    N = cfg.N
    rep.provenance = {"r_max": grid.r_max, "n": grid.n, "h": grid.h, "dt": cfg.dt, "T": cfg.T,
                      "steps": cfg.steps, "N": N, "sign": cfg.sign, "seed": None}
    if not sc.diagnostics:
        return rep
    if "smallness" in sc.diagnostics:
        sc_idx, pc = critical_indices(N)
        rep.value("s_c", sc_idx, "Sobolev index")
        rep.value("p_c", pc, "Lebesgue index")
        rep.value("||u0||_inf", lp_norm(s.pos, math.inf), "amplitude")
    if "projection" in sc.diagnostics:
        res = project(s)
        ok, mismatch = is_outgoing(s, 1e-6)
        rep.value("projection residual", res.residual, "relative", "1")
        rep.value("outgoing mismatch", mismatch, "relative", "1")
        rep.verdict("1:projection-sum", res.residual <= 1e-10, res.residual, 1e-10, "relative")
    method = sc.solver.get("method", "picard")
    if method not in ("picard", "fd", "both", "none"):
        raise ConfigError(f"unknown method {method!r}")
    u_p = u_f = None
    if method in ("picard", "both"):
        try:
            u_p, trace = picard_solve(s, None, cfg)
            rep.traces["picard"] = trace.to_dict()
            rep.verdict("7:picard-converges", trace.converged, trace.iterations, cfg.max_iter,
                        "iterations")
        except (BlowUp, ValueError) as exc:
            rep.errors.append(f"picard: {exc}")
    if method in ("fd", "both") or (method != "none" and ("reference" in sc.diagnostics
                                                           or "energy" in sc.diagnostics)):
        try:
            u_f, vel = reference_solve(s, cfg, return_velocity=True)
            if "energy" in sc.diagnostics:
                e = [energy(StatePair(u_f.at(j), vel.at(j)), N, cfg.sign) for j in range(u_f.times.size)]
                drift = abs(e[-1] - e[0]) / abs(e[0]) if e[0] else 0.0
                rep.value("energy drift", drift, "relative", "6")
                rep.verdict("6:energy-drift", drift <= 1e-4, drift, 1e-4, "relative")
                rep.series["energy"] = e
        except (BlowUp, ValueError) as exc:
            rep.errors.append(f"reference: {exc}")
    u = u_p if u_p is not None else u_f
    if u is not None:
        rep.series["t"] = list(u.times)
        rep.series["sup_norm"] = list(np.abs(u.samples).max(axis=0))
        rep.plots["sup_norm"] = [(t, y, method) for t, y in zip(u.times, rep.series["sup_norm"])]
        rep.plots["final_profile"] = [(r, y, "u(T)") for r, y in zip(grid.r, u.samples[:, -1])]
        if "energy" in rep.series and len(rep.series["energy"]) != len(rep.series["t"]):
            rep.series.pop("energy")
    if u is not None and "dispersion" in sc.diagnostics:
        disp = mixed_norm(u, N / 2, math.inf)
        rep.value("||u||_{L^{N/2}_t L^inf_x}", disp, "dispersion norm", "dispersion")
        if sc.kind == "far_support":
            scale = rep.values["bound scale ||u0||_H1 R^(2/N-1/2)"]["value"]
            rep.value("dispersion / bound scale", disp / scale, "dimensionless", "far_support")
        rep.value("weighted_sup", weighted_sup(u), "<r>|u|", "9")
        rep.value("weighted_l1t", weighted_l1t(u), "<r> int |u| dt", "9")
    if u is not None and "strichartz" in sc.diagnostics:
        try:
            rep.value("strichartz crit ratio", strichartz_ratio(u, s, N, "crit"), "dimensionless")
        except ValueError as exc:
            rep.errors.append(f"strichartz: {exc}")
    if u_p is not None and u_f is not None and "reference" in sc.diagnostics:
        diff = np.abs(u_p.samples - u_f.samples).max() / max(np.abs(u_f.samples).max(), 1e-300)
        rep.value("picard vs reference", diff, "relative sup", "7")
        rep.verdict("7:picard-vs-reference", diff <= 1e-3, diff, 1e-3, "relative sup")
    return rep


__all__ = [
    "ConfigError", "ExperimentReport", "FarSupportData", "FitResult", "MultibumpData",
    "Scenario", "SweepConfig", "Verdict", "c1_window", "critical_smallness", "emit_report",
    "erf_window", "load_scenario", "make_bounded_ball", "make_far_support", "make_multibump",
    "make_multiscale", "make_outgoing_shell", "ols_fit", "outgoing_closed_form",
    "outgoing_pair", "run_experiment", "run_shell_sweep", "scenario_from_dict",
    "shell_duhamel_norms", "shell_picard", "shell_profile",
]
