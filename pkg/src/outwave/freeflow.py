"""Free radial wave propagation, the sine propagator and Duhamel integrals.

Writing z = r u, radial solutions of u_tt = Delta u are solutions of the
half-line equation z_tt = z_rr with z(0, t) = 0.  ``propagate_free`` goes
through the half-line fields v = T(u): their primitives are exactly r*u0 and
K(x) = int_0^|x| s u1(s) ds on the grid, and integrating d'Alembert's formula
over [0, r] gives

    r u(r, t) = (z0(r-t) + z0(r+t))/2 + (K(r+t) - K(r-t))/2

with z0 extended oddly and K evenly.  Shifts are applied either by
band-limited (FFT) interpolation, which preserves the discrete L^2 norm, or
by linear interpolation.  Grid-aligned shifts are exact integer index
shifts in both modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .grid_core import (RadialField, RadialGrid, SpaceTimeField, StatePair,
                        cumulative, support_radius)
from .reduction1d import TWO_PI, HalfLineField, forward_T


class DomainTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class PropagatorPlan:
    grid: RadialGrid
    horizon: float
    method: str = "reduction"

    def check(self, *fields) -> None:
        _check_domain(self.grid, self.horizon, *fields)


def _check_domain(grid: RadialGrid, t: float, *arrays) -> None:
    reach = max(support_radius(np.asarray(a), grid, 1e-10) for a in arrays) + t
    if reach > grid.r_max * (1 + 1e-12) + 1e-12:
        raise DomainTooSmall(
            f"domain too small: data reach {reach:.4g} exceeds r_max={grid.r_max:.4g}")


def _aligned_steps(t: float, h: float) -> int | None:
    k = round(t / h)
    return k if abs(t - k * h) <= 1e-9 * max(h, t) else None


def shifted(f: np.ndarray, h: float, t: float, parity: int,
            method: str = "spectral", hold: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Return (f(r-t), f(r+t)) on the nodes for f extended with ``parity``
    (+1 even, -1 odd) to negative r and beyond the last node by zero, or by
    its last value when ``hold`` is set (linear or grid-aligned shifts)."""
    n = f.size
    k = _aligned_steps(t, h)
    pad = (k if k is not None else int(np.ceil(t / h))) + 2
    m = n + pad
    ext = np.zeros(2 * m)
    ext[m:m + n] = f
    ext[m - n + 1:m] = parity * f[:0:-1]
    if hold:
        ext[m + n:] = f[-1]
        ext[:m - n + 1] = parity * f[-1]
    if k is not None:
        return ext[m - k:m - k + n].copy(), ext[m + k:m + k + n].copy()
    if method == "linear":
        x = (np.arange(2 * m) - m) * h
        r = np.arange(n) * h
        return np.interp(r - t, x, ext), np.interp(r + t, x, ext)
    if method != "spectral" or hold:
        raise ValueError(f"unknown shift method {method!r}")
    size = fft.next_fast_len(2 * m, real=True)
    spec = fft.rfft(ext, size)
    omega = 2 * np.pi * fft.rfftfreq(size, d=h)
    minus = fft.irfft(spec * np.exp(-1j * omega * t), size)[m:m + n]
    plus = fft.irfft(spec * np.exp(1j * omega * t), size)[m:m + n]
    return minus, plus


def _odd_limit(z: np.ndarray, h: float) -> float:
    """Slope at r=0 of an odd function from its values at h and 2h."""
    return (8 * z[1] - z[2]) / (6 * h)


# ---------------------------------------------------------------------------
# half-line flow

def dalembert_halfline(v0: HalfLineField, v1: HalfLineField, t: float) -> HalfLineField:
    """Neumann half-line d'Alembert solution by linear interpolation."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    grid = v0.grid
    _check_domain(grid, t, v0.samples, v1.samples)
    h = grid.h
    a_m, a_p = shifted(v0.samples, h, t, +1, "linear")
    prim = cumulative(v1.samples, h)
    b_m, b_p = shifted(prim, h, t, -1, "linear", hold=True)
    return HalfLineField(grid, 0.5 * (a_m + a_p) + 0.5 * (b_p - b_m))


def propagate_free(s: StatePair, t: float, method: str = "spectral") -> StatePair:
    """Free evolution Phi(t)(u0, u1) -> (u(t), u_t(t))."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return s
    grid = s.grid
    _check_domain(grid, t, s.pos.samples, s.vel.samples)
    h, r = grid.h, grid.r
    v0 = forward_T(s.pos).samples
    v1 = forward_T(s.vel).samples
    z0 = TWO_PI * cumulative(v0, h)          # = r u0
    kk = TWO_PI * cumulative(cumulative(v1, h), h)  # = int_0^r s u1
    z1 = r * s.vel.samples
    z0m, z0p = shifted(z0, h, t, -1, method)
    km, kp = shifted(kk - kk[-1], h, t, +1, method)
    dm, dp = shifted(TWO_PI * v0, h, t, +1, method)
    z1m, z1p = shifted(z1, h, t, -1, method)

    z = 0.5 * (z0m + z0p) + 0.5 * (kp - km)
    zt = 0.5 * (dp - dm) + 0.5 * (z1p + z1m)
    pos = np.empty(grid.n)
    vel = np.empty(grid.n)
    pos[1:] = z[1:] / r[1:]
    vel[1:] = zt[1:] / r[1:]
    pos[0] = 0.5 * (dm[0] + dp[0]) + 0.5 * (z1p[0] - z1m[0])
    vel[0] = _odd_limit(zt, h)
    return StatePair(RadialField(grid, pos), RadialField(grid, vel))


def outgoing_closed_form(u0: RadialField, t: float, method: str = "spectral") -> RadialField:
    """((r-t)/r) u0(r-t) for r > t, zero for r <= t."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return u0
    r = u0.grid.r
    zm, _ = shifted(r * u0.samples, u0.grid.h, t, -1, method)
    out = np.zeros_like(zm)
    ahead = r > t * (1 + 1e-12)
    out[ahead] = zm[ahead] / r[ahead]
    return u0.with_samples(out)


def free_evolution(s: StatePair, times, method: str = "spectral") -> SpaceTimeField:
    grid = s.grid
    return SpaceTimeField.from_slices(
        grid, times, [propagate_free(s, float(t), method).pos for t in times])


# ---------------------------------------------------------------------------
# sine propagator and Duhamel

def sine_propagator(f: RadialField, t: float) -> RadialField:
    """sin(t sqrt(-Delta))/sqrt(-Delta) f = (1/2r) int_{|r-t|}^{r+t} s f(s) ds."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    grid = f.grid
    if t == 0:
        return f.with_samples(np.zeros(grid.n))
    _check_domain(grid, t, f.samples)
    r = grid.r
    prim = cumulative(r * f.samples, grid.h)
    hi = np.interp(r + t, r, prim)
    lo = np.interp(np.abs(r - t), r, prim)
    out = np.empty(grid.n)
    out[1:] = (hi[1:] - lo[1:]) / (2 * r[1:])
    out[0] = t * np.interp(t, r, f.samples, right=0.0)
    return f.with_samples(out)


def trapezoid_time_weights(times: np.ndarray, j: int) -> np.ndarray:
    w = np.zeros(j + 1)
    if j == 0:
        return w
    dt = np.diff(times[:j + 1])
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def duhamel(F: SpaceTimeField, t_index: int) -> RadialField:
    """int_0^{t_j} S(t_j - s) F(s) ds by the trapezoid rule over F.times."""
    times = F.times
    if not 0 <= t_index < times.size:
        raise IndexError("t_index outside the time lattice")
    w = trapezoid_time_weights(times, t_index)
    acc = np.zeros(F.grid.n)
    for k in range(t_index):
        if w[k]:
            acc += w[k] * sine_propagator(F.at(k), times[t_index] - times[k]).samples
    return RadialField(F.grid, acc)


class DuhamelStream:
    """Trapezoid Duhamel integral on a uniform lattice with dt = m*h.

    Feed the source F(., t_j) for j = 0, 1, 2, ... through :meth:`push`; each
    call returns w(., t_j).  The kernel shifts are whole grid steps, so the
    quadrature equals :func:`duhamel` exactly while the per-step cost is O(n)
    instead of O(j n).  The running sums follow the characteristics:

        D_j[x] = D_{j-1}[x + m] + c_j P_j[x]      (outgoing arm)
        E_j[x] = E_{j-1}[x - m] + c_j P_j[x]      (incoming arm, reflected at 0)

    where P_j is the primitive of r F_j and c_j the trapezoid weight.
    """

    def __init__(self, grid: RadialGrid, dt: float):
        m = _aligned_steps(dt, grid.h)
        if m is None or m < 1:
            raise ValueError("DuhamelStream needs dt equal to a whole number of grid steps")
        self.grid, self.dt, self.m = grid, dt, m
        n = grid.n
        self.D = np.zeros(n)
        self.E = np.zeros(n)
        self.H = np.zeros(n)
        self.S = 0.0
        self.j = -1

    def push(self, source: np.ndarray) -> np.ndarray:
        grid, m = self.grid, self.m
        n, h, r = grid.n, grid.h, grid.r
        rf = r * source
        prim = cumulative(rf, h)
        c = 0.5 if self.j < 0 else 1.0
        D, E, H = self.D, self.E, self.H
        newD = np.full(n, self.S)
        newH = np.zeros(n)
        if m < n:
            newD[:n - m] = D[m:]
            newH[:n - m] = H[m:]
        newE = np.empty(n)
        k = min(m, n)
        newE[:k] = D[m - np.arange(k)] if m < n else self._far(m - np.arange(k))
        newE[k:] = E[:n - k]
        self.D = newD + c * prim
        self.E = newE + c * prim
        self.H = newH + c * rf
        self.S += c * prim[-1]
        self.j += 1
        out = np.empty(n)
        out[1:] = 0.5 * self.dt * (self.D[1:] - self.E[1:]) / r[1:]
        out[0] = self.dt * self.H[0]
        return out

    def _far(self, idx):
        return np.where(idx < self.grid.n, self.D[np.minimum(idx, self.grid.n - 1)], self.S)


def duhamel_all(F: SpaceTimeField) -> SpaceTimeField:
    """Duhamel integral at every lattice time."""
    times = F.times
    steps = np.diff(times)
    uniform = steps.size and np.allclose(steps, steps[0], rtol=1e-10, atol=0)
    if uniform and _aligned_steps(steps[0], F.grid.h):
        stream = DuhamelStream(F.grid, steps[0])
        cols = [stream.push(F.samples[:, j]) for j in range(times.size)]
        return SpaceTimeField(F.grid, times, np.stack(cols, axis=1))
    cols = [duhamel(F, j).samples for j in range(times.size)]
    return SpaceTimeField(F.grid, times, np.stack(cols, axis=1))
