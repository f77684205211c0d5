"""Uniform radial grids, sampled fields, quadrature and differentiation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid


class ResolutionError(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int

    def __post_init__(self):
        if self.n < 2 or not self.r_max > 0:
            raise ValueError("grid needs n >= 2 and r_max > 0")

    @property
    def h(self) -> float:
        return self.r_max / (self.n - 1)

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @classmethod
    def with_spacing(cls, h: float, r_max: float) -> "RadialGrid":
        """Grid with spacing exactly ``h`` covering at least ``r_max``."""
        m = int(np.ceil(r_max / h - 1e-9))
        return cls(m * h, m + 1)


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    samples: np.ndarray

    def __post_init__(self):
        s = _frozen(self.samples)
        if s.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("field samples must be finite")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, grid: RadialGrid, fn) -> "RadialField":
        return cls(grid, fn(grid.r))

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def with_samples(self, samples) -> "RadialField":
        return RadialField(self.grid, samples)

    def __add__(self, other):
        return self.with_samples(self.samples + _samples(other))

    def __sub__(self, other):
        return self.with_samples(self.samples - _samples(other))

    def __mul__(self, c):
        return self.with_samples(self.samples * _samples(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_samples(-self.samples)


def _samples(x):
    return x.samples if isinstance(x, RadialField) else x


@dataclass(frozen=True, eq=False)
class StatePair:
    pos: RadialField
    vel: RadialField

    def __post_init__(self):
        if self.pos.grid != self.vel.grid:
            raise ValueError("position and velocity must share a grid")

    @property
    def grid(self) -> RadialGrid:
        return self.pos.grid

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "StatePair":
        z = RadialField(grid, np.zeros(grid.n))
        return cls(z, z)

    def __add__(self, other: "StatePair") -> "StatePair":
        return StatePair(self.pos + other.pos, self.vel + other.vel)

    def __sub__(self, other: "StatePair") -> "StatePair":
        return StatePair(self.pos - other.pos, self.vel - other.vel)

    def __mul__(self, c: float) -> "StatePair":
        return StatePair(self.pos * c, self.vel * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """u(r_i, t_j) stored as an array of shape (n, M+1)."""

    grid: RadialGrid
    times: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        t = _frozen(self.times)
        s = _frozen(self.samples)
        if t.ndim != 1 or t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        if s.shape != (self.grid.n, t.size):
            raise ValueError(f"expected shape {(self.grid.n, t.size)}, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("space-time samples must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "samples", s)

    def at(self, j: int) -> RadialField:
        return RadialField(self.grid, self.samples[:, j])

    @classmethod
    def from_slices(cls, grid, times, slices) -> "SpaceTimeField":
        return cls(grid, times, np.stack([_samples(s) for s in slices], axis=1))


# ---------------------------------------------------------------------------
# quadrature and differences

def trapezoid_weights(grid: RadialGrid) -> np.ndarray:
    w = np.full(grid.n, grid.h)
    w[0] = w[-1] = grid.h / 2
    return w


def radial_weights(grid: RadialGrid) -> np.ndarray:
    """Trapezoid weights for the measure 4 pi r^2 dr."""
    return trapezoid_weights(grid) * 4 * np.pi * grid.r**2


def integrate_radial(f: RadialField) -> float:
    return float(np.dot(radial_weights(f.grid), f.samples))


def differentiate(f: RadialField) -> RadialField:
    """Second-order central differences, one-sided second order at the ends."""
    if f.grid.n < 3:
        raise ResolutionError("insufficient resolution")
    return f.with_samples(np.gradient(f.samples, f.grid.h, edge_order=2))


def cumulative(f: np.ndarray, h: float) -> np.ndarray:
    """Cumulative trapezoid integral from r=0, same length as ``f``."""
    return cumulative_trapezoid(f, dx=h, initial=0.0)


def trapezoid_derivative(g: np.ndarray, h: float, slope0: float) -> np.ndarray:
    """Exact left inverse of :func:`cumulative` on sequences with g[0] = 0.

    Solves (d[k-1] + d[k]) h/2 = g[k] - g[k-1] with d[0] = ``slope0``.
    The recurrence is second-order accurate for smooth g and makes
    ``cumulative(trapezoid_derivative(g, h, s), h) == g - g[0]`` hold to
    rounding for any choice of the starting slope.
    """
    q = 2.0 * np.diff(g) / h
    n = g.size
    sgn = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    # d[k] = (-1)^k (d0 + sum_{j<=k} (-1)^j q_j), written as a cumulative sum
    acc = np.concatenate(([slope0], np.cumsum(sgn[1:] * q) + slope0))
    return sgn * acc


def resample(f: RadialField, target: RadialGrid) -> RadialField:
    if target == f.grid:
        return f
    return RadialField(target, np.interp(target.r, f.grid.r, f.samples, right=0.0))


def support_radius(samples: np.ndarray, grid: RadialGrid, rel_tol: float = 1e-13) -> float:
    a = np.abs(samples)
    top = a.max(initial=0.0)
    if top == 0:
        return 0.0
    idx = np.nonzero(a > rel_tol * top)[0]
    return float(grid.r[min(idx[-1] + 1, grid.n - 1)])


# ---------------------------------------------------------------------------
# CSV

def write_field_csv(f: RadialField, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "value"])
        for r, v in zip(f.grid.r, f.samples):
            w.writerow([repr(float(r)), repr(float(v))])


def read_field_csv(path) -> RadialField:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    r, v = data[:, 0], data[:, 1]
    grid = RadialGrid(float(r[-1]), r.size)
    if not np.allclose(r, grid.r, rtol=0, atol=1e-9 * grid.r_max):
        raise ValueError("field CSV must be sampled on a uniform grid starting at r=0")
    return RadialField(grid, v)


def write_spacetime_csv(u: SpaceTimeField, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "t", "value"])
        r = u.grid.r
        for j, t in enumerate(u.times):
            for i in range(u.grid.n):
                w.writerow([repr(float(r[i])), repr(float(t)), repr(float(u.samples[i, j]))])


def read_spacetime_csv(path) -> SpaceTimeField:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 1])
    n = data.shape[0] // times.size
    r = data[:n, 0]
    grid = RadialGrid(float(r[-1]), n)
    return SpaceTimeField(grid, times, data[:, 2].reshape(times.size, n).T)
