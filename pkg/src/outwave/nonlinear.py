"""Solvers for u_tt - Delta u +- |u|^N u = 0 in radial symmetry.

Two independent schemes are provided: the Duhamel/Picard fixed point built on
the free flow and the sine-kernel Duhamel integral, and a leapfrog
finite-difference reference for z = r u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .freeflow import (DuhamelStream, _aligned_steps, _odd_limit, duhamel_all,
                       outgoing_closed_form, propagate_free)
from .grid_core import RadialField, RadialGrid, SpaceTimeField, StatePair
from .norms import gradient_norm, lp_norm, mixed_norm
from .projections import is_outgoing

DEFOCUSING, FOCUSING = +1, -1


class BlowUp(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"solution blew up at t={t:.6g}")
        self.t = t


class CFLError(ValueError):
    pass


def parse_sign(sign) -> int:
    if sign in (1, "+", "defocusing", "+1"):
        return DEFOCUSING
    if sign in (-1, "-", "focusing", "-1"):
        return FOCUSING
    raise ValueError(f"unknown sign {sign!r}")


@dataclass(frozen=True)
class SolverConfig:
    N: int
    sign: int
    T: float
    dt: float
    grid: RadialGrid
    max_iter: int = 60
    tol: float = 1e-10
    coupling: float = 1.0
    plain_power: bool = False
    save_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sign", parse_sign(self.sign))
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0 < self.dt <= self.grid.h * (1 + 1e-9):
            raise CFLError(f"dt={self.dt:.4g} violates dt <= h={self.grid.h:.4g}")

    @property
    def steps(self) -> int:
        return max(1, int(round(self.T / self.dt)))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def forcing(self, u: np.ndarray) -> np.ndarray:
        """Right-hand side G with u_tt - Delta u = G."""
        if self.plain_power:
            nl = u ** (self.N + 1)
        else:
            nl = np.abs(u) ** self.N * u
        return -self.sign * self.coupling * nl


@dataclass
class PicardTrace:
    iterations: int = 0
    deltas: list = field(default_factory=list)
    converged: bool = False
    threshold: float = 0.0
    lnt_linf: float = math.nan

    @property
    def ratios(self) -> list:
        d = self.deltas
        return [d[k + 1] / d[k] for k in range(len(d) - 1) if d[k] > 0]

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "deltas": list(self.deltas),
                "ratios": self.ratios, "converged": self.converged,
                "threshold": self.threshold, "L^{N/2}_t L^inf_x": self.lnt_linf}


# ---------------------------------------------------------------------------
# finite-difference reference

def reference_solve(s: StatePair, cfg: SolverConfig, return_velocity: bool = False):
    """Leapfrog for z_tt = z_rr + r G(z/r), z(0) = z(r_max) = 0."""
    grid = s.grid
    h, dt, r = grid.h, cfg.dt, grid.r
    lam2 = (dt / h) ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        def u_of(z):
            u = np.empty_like(z)
            u[1:] = z[1:] / r[1:]
            u[0] = _odd_limit(z, h)
            return u

        def accel(z):
            a = np.zeros_like(z)
            a[1:-1] = (z[2:] - 2 * z[1:-1] + z[:-2]) / h**2
            if cfg.coupling:
                a += r * cfg.forcing(u_of(z))
            a[0] = a[-1] = 0.0
            return a

        limit = 1e8 * max(np.abs(s.pos.samples).max(), np.abs(s.vel.samples).max() * max(cfg.T, 1), 1e-300)
        z_prev = r * s.pos.samples
        z_prev[-1] = 0.0
        zt0 = r * s.vel.samples
        zt0[-1] = 0.0
        # Taylor start carried to fourth order in the linear part, so the
        # start-up error does not seed a spurious incoming wave
        a0 = accel(z_prev) + _d4(z_prev, h) - _d2(z_prev, h)
        z = (z_prev + dt * zt0 + 0.5 * dt**2 * a0
             + dt**3 / 6 * _d4(zt0, h) + dt**4 / 24 * _d2(_d2(z_prev, h), h))
        z[0] = z[-1] = 0.0
        steps = cfg.steps
        keep = list(range(0, steps + 1, cfg.save_every))
        if keep[-1] != steps:
            keep.append(steps)
        keep_set = set(keep)
        out, vout = [u_of(z_prev)], [s.vel.samples.copy()]
        for n in range(1, steps + 1):
            z_next = 2 * z - z_prev + dt**2 * accel(z)
            z_next[0] = z_next[-1] = 0.0
            if n in keep_set:
                u = u_of(z)
                if not np.all(np.isfinite(u)) or np.abs(u).max() > limit:
                    raise BlowUp(n * dt)
                out.append(u)
                vout.append(u_of((z_next - z_prev) / (2 * dt)))
            z_prev, z = z, z_next
    times = np.array(keep, dtype=float) * dt
    u = SpaceTimeField(grid, times, np.stack(out, axis=1))
    if return_velocity:
        return u, SpaceTimeField(grid, times, np.stack(vout, axis=1))
    return u


def _d2(z: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(z)
    out[1:-1] = (z[2:] - 2 * z[1:-1] + z[:-2]) / h**2
    return out


def _d4(z: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order second difference, second order next to the ends."""
    out = _d2(z, h)
    out[2:-2] = (-z[4:] + 16 * z[3:-1] - 30 * z[2:-2] + 16 * z[1:-3] - z[:-4]) / (12 * h**2)
    return out


# ---------------------------------------------------------------------------
# Picard iteration

def _free_lattice(s: StatePair, times: np.ndarray) -> np.ndarray:
    grid = s.grid
    if not np.any(s.pos.samples) and not np.any(s.vel.samples):
        return np.zeros((grid.n, times.size))
    with np.errstate(all="ignore"):
        outgoing, _ = is_outgoing(s, 1e-9)
    if outgoing:
        cols = [outgoing_closed_form(s.pos, float(t)).samples for t in times]
    else:
        cols = [propagate_free(s, float(t)).pos.samples for t in times]
    return np.stack(cols, axis=1)


def _l2_in_space(a: np.ndarray, grid: RadialGrid) -> np.ndarray:
    from .grid_core import radial_weights
    return np.sqrt(radial_weights(grid) @ (a * a))


def picard_solve(v_data: StatePair, w_data: StatePair | None, cfg: SolverConfig,
                 v_free: np.ndarray | None = None):
    """Fixed point w = Phi(t) w_data + Duhamel(G(v + w)), v = Phi(t) v_data.

    Convergence is declared when the L^inf_t L^2_x size of the update falls
    below ``cfg.tol`` times the L^inf_t L^2_x size of v + Phi(t) w_data.
    ``v_free`` may supply v on the (n, steps+1) lattice directly, e.g. the
    closed-form evolution of a sharp outgoing profile.
    """
    grid = v_data.grid
    times = cfg.times
    if w_data is None:
        w_data = StatePair.zeros(grid)
    v = _free_lattice(v_data, times) if v_free is None else np.asarray(v_free, dtype=float)
    w_free = _free_lattice(w_data, times)
    scale = float(np.max(_l2_in_space(v + w_free, grid)))
    trace = PicardTrace(threshold=cfg.tol * scale if scale > 0 else cfg.tol)
    w = w_free.copy()
    for _ in range(cfg.max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            source = cfg.forcing(v + w)
        if not np.all(np.isfinite(source)):
            break
        w_new = w_free + duhamel_all(SpaceTimeField(grid, times, source)).samples
        delta = float(np.max(_l2_in_space(w_new - w, grid)))
        trace.iterations += 1
        trace.deltas.append(delta)
        w = w_new
        if not math.isfinite(delta) or delta > 1e6 * max(scale, 1.0):
            break
        if delta <= trace.threshold:
            trace.converged = True
            break
    if not np.all(np.isfinite(w)):
        w = np.nan_to_num(w, nan=0.0, posinf=0.0, neginf=0.0)
    u = SpaceTimeField(grid, times, v + w)
    trace.lnt_linf = mixed_norm(u, cfg.N / 2, math.inf)
    return u, trace


def time_derivative(u: SpaceTimeField, j: int) -> RadialField:
    """Second-order finite difference in time at lattice index j."""
    t, a = u.times, u.samples
    if 0 < j < t.size - 1:
        d = (a[:, j + 1] - a[:, j - 1]) / (t[j + 1] - t[j - 1])
    elif j == 0:
        d = (-3 * a[:, 0] + 4 * a[:, 1] - a[:, 2]) / (t[2] - t[0])
    else:
        d = (3 * a[:, -1] - 4 * a[:, -2] + a[:, -3]) / (t[-1] - t[-3])
    return RadialField(u.grid, d)


# ---------------------------------------------------------------------------
# scattering

@dataclass(frozen=True, eq=False)
class ScatteringState:
    state: StatePair
    tail_norm: float
    horizon: float


def scattering_state(u: SpaceTimeField, cfg: SolverConfig,
                     w_data: StatePair | None = None) -> ScatteringState:
    """w0+ = w0 - int_0^T S(s) G(s) ds,  w1+ = w1 + int_0^T C(s) G(s) ds,
    where G is the forcing evaluated on u and S, C the sine and cosine flows."""
    grid = u.grid
    if w_data is None:
        w_data = StatePair.zeros(grid)
    G = cfg.forcing(u.samples)
    times = u.times
    zero = np.zeros(grid.n)
    sin_part = np.zeros((grid.n, times.size))
    cos_part = np.zeros((grid.n, times.size))
    for j, t in enumerate(times):
        g = RadialField(grid, G[:, j])
        if not np.any(g.samples):
            continue
        if t == 0:
            cos_part[:, j] = g.samples
            continue
        sin_part[:, j] = propagate_free(StatePair(RadialField(grid, zero), g), float(t)).pos.samples
        cos_part[:, j] = propagate_free(StatePair(g, RadialField(grid, zero)), float(t)).pos.samples
    w0 = w_data.pos.samples - np.trapezoid(sin_part, times, axis=1)
    w1 = w_data.vel.samples + np.trapezoid(cos_part, times, axis=1)
    late = times >= 0.8 * times[-1]
    tail = float(np.trapezoid(_l2_in_space(G[:, late], grid), times[late])) if late.sum() > 1 else 0.0
    return ScatteringState(StatePair(RadialField(grid, w0), RadialField(grid, w1)),
                           tail, float(times[-1]))


def energy_space_norm(s: StatePair) -> float:
    """||u0||_{H^1} + ||u1||_{L^2}."""
    return gradient_norm(s.pos) + lp_norm(s.vel, 2)


def scattering_defect(u: SpaceTimeField, v_data: StatePair, w_plus: StatePair, j: int) -> float:
    """||(u, u_t)(t_j) - Phi(t_j) v_data - Phi(t_j) w_plus|| in H^1 x L^2."""
    t = float(u.times[j])
    free = propagate_free(v_data + w_plus, t)
    actual = StatePair(u.at(j), time_derivative(u, j))
    return energy_space_norm(actual - free)


# ---------------------------------------------------------------------------
# local existence

def local_existence_probe(s: StatePair, N: int, c_grid, amplitudes=(1, 2, 4, 8),
                          sign=DEFOCUSING, steps: int = 32, max_iter: int = 40,
                          tol: float = 1e-10) -> list[dict]:
    """Picard on [0, c a^{-N/2}] for data a * s / ||s||_inf."""
    ok, res = is_outgoing(s, 1e-6)
    if not ok:
        raise ValueError(f"local_existence_probe needs outgoing data (residual {res:.3g})")
    unit = s * (1.0 / lp_norm(s.pos, math.inf))
    grid = s.grid
    rows = []
    for c in np.atleast_1d(c_grid):
        for a in amplitudes:
            if a == 0:
                rows.append({"c": float(c), "a": 0.0, "T": math.inf, "converged": True,
                             "iterations": 0, "final_ratio": 0.0})
                continue
            T = float(c) * a ** (-N / 2)
            m = max(steps, int(np.ceil(T / grid.h)))
            cfg = SolverConfig(N=N, sign=sign, T=T, dt=T / m, grid=grid,
                               max_iter=max_iter, tol=tol)
            _, trace = picard_solve(unit * float(a), None, cfg)
            ratios = trace.ratios
            rows.append({"c": float(c), "a": float(a), "T": T, "converged": trace.converged,
                         "iterations": trace.iterations,
                         "final_ratio": ratios[-1] if ratios else 0.0})
    return rows
