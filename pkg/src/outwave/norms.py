"""Lebesgue, Lorentz, Sobolev, space-time and energy functionals on radial fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dst

from .grid_core import (RadialField, SpaceTimeField, StatePair, differentiate,
                        radial_weights, trapezoid_weights)

INFINITE = "infinite"


class SobolevDomainError(ValueError):
    pass


@dataclass
class NormReport:
    values: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def add(self, label: str, value: float) -> None:
        self.values[label] = finite_or_label(value)

    def to_dict(self) -> dict:
        return {"values": dict(self.values), "metadata": dict(self.metadata)}


def finite_or_label(x: float):
    x = float(x)
    return x if math.isfinite(x) else INFINITE


def fmt_exp(x) -> str:
    """Stable label formatting: 'inf', integers bare, others with 6 decimals."""
    if x == math.inf:
        return "inf"
    if float(x).is_integer():
        return str(int(x))
    return f"{x:.6f}"


def _bracket(p) -> float:
    return math.inf if p in (math.inf, "inf") else float(p)


# ---------------------------------------------------------------------------
# spatial norms

def lp_norm(u: RadialField, p) -> float:
    p = _bracket(p)
    a = np.abs(u.samples)
    if p == math.inf:
        return float(a.max(initial=0.0))
    return float(np.dot(radial_weights(u.grid), a**p) ** (1 / p))


def _lorentz_from_steps(heights, measures, p, q) -> float:
    """Lorentz quasinorm of the step rearrangement with ``heights`` (nonincreasing)
    on the intervals (m_{k-1}, m_k] given by the cumulative ``measures``."""
    p, q = float(p), _bracket(q)
    if heights.size == 0:
        return 0.0
    m = np.asarray(measures, dtype=float)
    if q == math.inf:
        return float(np.max(heights * m ** (1 / p)))
    prev = np.concatenate(([0.0], m[:-1]))
    total = np.sum(heights**q * (p / q) * (m ** (q / p) - prev ** (q / p)))
    return float(total ** (1 / q))


def decreasing_rearrangement(u: RadialField) -> tuple[np.ndarray, np.ndarray]:
    """Step rearrangement: sorted |u| with the cumulative cell measure."""
    a = np.abs(u.samples)
    w = radial_weights(u.grid)
    keep = (a > 0) & (w > 0)
    order = np.argsort(-a[keep], kind="stable")
    return a[keep][order], np.cumsum(w[keep][order])


def lorentz_norm(u: RadialField, p, q) -> float:
    if not 1 <= p < math.inf:
        raise ValueError("lorentz_norm needs 1 <= p < inf")
    heights, measures = decreasing_rearrangement(u)
    return _lorentz_from_steps(heights, measures, p, q)


def radial_fourier(u: RadialField) -> tuple[np.ndarray, np.ndarray]:
    """(rho_k, u_hat(rho_k)) with u_hat(rho) = (4 pi / rho) int r u sin(rho r) dr,
    sampled at rho_k = k pi / r_max by a type-I sine transform."""
    g = u.grid
    x = (g.r * u.samples)[1:-1]
    k = np.arange(1, g.n - 1)
    rho = k * np.pi / g.r_max
    # scipy's DST-I carries a factor 2
    sine_sum = dst(x, type=1) / 2 * g.h
    return rho, 4 * np.pi * sine_sum / rho


def sobolev_norm(u: RadialField, s: float) -> float:
    if not 0 <= s < 1.5:
        raise ValueError("sobolev_norm supports 0 <= s < 3/2")
    top = np.abs(u.samples).max(initial=0.0)
    if top == 0:
        return 0.0
    if abs(u.samples[-1]) > 1e-8 * top:
        raise SobolevDomainError("not in Sobolev domain: field does not decay at r_max")
    rho, uh = radial_fourier(u)
    drho = np.pi / u.grid.r_max
    total = np.sum(rho ** (2 + 2 * s) * uh**2) * drho / (2 * np.pi**2)
    return float(np.sqrt(total))


def gradient_norm(u: RadialField) -> float:
    return lp_norm(differentiate(u), 2)


# ---------------------------------------------------------------------------
# space-time norms

def _time_norm(values: np.ndarray, times: np.ndarray, p: float, axis: int) -> np.ndarray:
    a = np.abs(values)
    if p == math.inf:
        return a.max(axis=axis)
    return np.trapezoid(a**p, times, axis=axis) ** (1 / p)


def mixed_norm(u: SpaceTimeField, p_t, q_x) -> float:
    """||u||_{L^p_t L^q_x}: space first, then time."""
    p, q = _bracket(p_t), _bracket(q_x)
    a = np.abs(u.samples)
    if q == math.inf:
        inner = a.max(axis=0)
    else:
        inner = (radial_weights(u.grid) @ a**q) ** (1 / q)
    return float(_time_norm(inner, u.times, p, axis=0))


def reversed_norm(u: SpaceTimeField, q_x, p_t, lorentz_q=None) -> float:
    """||u||_{L^q_x L^p_t}: time first at each radius, then space.  With
    ``lorentz_q`` the outer norm is the Lorentz norm L^{q, lorentz_q}."""
    p, q = _bracket(p_t), _bracket(q_x)
    trace = _time_norm(u.samples, u.times, p, axis=1)
    f = RadialField(u.grid, trace)
    if lorentz_q is not None:
        return lorentz_norm(f, q, lorentz_q)
    return lp_norm(f, q)


def japanese(r):
    return np.sqrt(1 + np.asarray(r) ** 2)


def weighted_sup(u: SpaceTimeField) -> float:
    """sup over (r, t) of <r> |u|."""
    return float(np.max(japanese(u.grid.r)[:, None] * np.abs(u.samples), initial=0.0))


def weighted_l1t(u: SpaceTimeField) -> float:
    """sup over r of <r> int |u(r, t)| dt."""
    return float(np.max(japanese(u.grid.r) * np.trapezoid(np.abs(u.samples), u.times, axis=1),
                        initial=0.0))


# ---------------------------------------------------------------------------
# energy-type functionals

def energy(s: StatePair, N: int, sign: int, coupling: float = 1.0) -> float:
    """int u_t^2/2 + |grad u|^2/2 + sign * coupling |u|^{N+2}/(N+2)."""
    w = radial_weights(s.grid)
    ur = differentiate(s.pos).samples
    density = 0.5 * s.vel.samples**2 + 0.5 * ur**2
    if coupling:
        density = density + sign * coupling * np.abs(s.pos.samples) ** (N + 2) / (N + 2)
    return float(w @ density)


def morawetz(u: SpaceTimeField, N: int) -> float:
    """int int |u|^{N+2}/|x| dx dt."""
    w = trapezoid_weights(u.grid) * 4 * np.pi * u.grid.r
    return float(np.trapezoid(w @ np.abs(u.samples) ** (N + 2), u.times))


def critical_indices(N: int) -> tuple[float, float]:
    """(s_c, p_c) = (3/2 - 2/N, 3N/2)."""
    return 1.5 - 2 / N, 1.5 * N


def _data_norm(s0: StatePair, N: int) -> float:
    sc, _ = critical_indices(N)
    return sobolev_norm(s0.pos, sc) + sobolev_norm(s0.vel, sc - 1)


STRICHARTZ_FLAVORS = ("crit", "strichartz", "reversed_inf", "reversed_N2")


def strichartz_ratio(u: SpaceTimeField, s0: StatePair, N: int, flavor: str = "crit") -> float:
    """LHS/RHS of one of the dispersive estimates for a free evolution.

    crit          ||u||_{L^{N/2}_t L^inf_x} / ||u0||_{H^1}^{4/N} ||u0||_inf^{1-4/N}
    strichartz    ||u||_{L^{N/2}_t L^inf_x} / (||u0||_{H^sc} + ||u1||_{H^{sc-1}})
    reversed_inf  ||u||_{L^{3N/2,2}_x L^inf_t} / same data norm
    reversed_N2   ||u||_{L^inf_x L^{N/2}_t} / same data norm
    """
    if flavor not in STRICHARTZ_FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r}; expected one of {STRICHARTZ_FLAVORS}")
    if not np.any(s0.pos.samples) and not np.any(s0.vel.samples):
        return 0.0
    if flavor == "crit":
        lhs = mixed_norm(u, N / 2, math.inf)
        rhs = gradient_norm(s0.pos) ** (4 / N) * lp_norm(s0.pos, math.inf) ** (1 - 4 / N)
    elif flavor == "strichartz":
        lhs, rhs = mixed_norm(u, N / 2, math.inf), _data_norm(s0, N)
    elif flavor == "reversed_inf":
        lhs, rhs = reversed_norm(u, 1.5 * N, math.inf, lorentz_q=2), _data_norm(s0, N)
    else:
        lhs, rhs = reversed_norm(u, math.inf, N / 2), _data_norm(s0, N)
    return lhs / rhs if rhs > 0 else math.inf


def norm_report(u: RadialField, specs) -> NormReport:
    """Evaluate a list of (kind, params) entries on a single field."""
    rep = NormReport(metadata={"r_max": u.grid.r_max, "n": u.grid.n})
    for kind, prm in specs:
        if kind == "Lp":
            rep.add(f"Lp(p={fmt_exp(prm['p'])})", lp_norm(u, prm["p"]))
        elif kind == "Lorentz":
            rep.add(f"Lpq(p={fmt_exp(prm['p'])},q={fmt_exp(prm['q'])})",
                    lorentz_norm(u, prm["p"], prm["q"]))
        elif kind == "Hdot":
            rep.add(f"Hdot(s={fmt_exp(prm['s'])})", sobolev_norm(u, prm["s"]))
        else:
            raise ValueError(f"unknown norm kind {kind!r}")
    return rep


def spacetime_report(u: SpaceTimeField, specs) -> NormReport:
    rep = NormReport(metadata={"r_max": u.grid.r_max, "n": u.grid.n,
                               "T": float(u.times[-1]), "steps": int(u.times.size - 1)})
    for kind, prm in specs:
        if kind == "LptLqx":
            rep.add(f"Lpt_Lqx(p={fmt_exp(prm['p'])},q={fmt_exp(prm['q'])})",
                    mixed_norm(u, prm["p"], prm["q"]))
        elif kind == "LqxLpt":
            rep.add(f"Lqx_Lpt(q={fmt_exp(prm['q'])},p={fmt_exp(prm['p'])})",
                    reversed_norm(u, prm["q"], prm["p"]))
        elif kind == "weighted_sup":
            rep.add("weighted_sup", weighted_sup(u))
        elif kind == "weighted_l1t":
            rep.add("weighted_l1t", weighted_l1t(u))
        elif kind == "morawetz":
            rep.add(f"morawetz(N={prm['N']})", morawetz(u, prm["N"]))
        else:
            raise ValueError(f"unknown norm kind {kind!r}")
    return rep
