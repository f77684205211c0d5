"""Kato norms, the outer measure mu_alpha and Lorentz-Choquet quasinorms.

Sets are finite unions of balls (optionally with a concentric hole, so band
supports of radial profiles are representable) and functions are finite sums
of translated radial profiles.  The weighted volume

    I_alpha(A, y) = int_A |x - y|^{-alpha} dx

has a closed form for a single ball at any y.  Disjoint pieces are additive;
clusters of overlapping balls are integrated along rays from y, where the
radial part is exact and only the angular part uses quadrature.

mu_alpha(A) = sup_y I_alpha(A, y) is approximated by a candidate search:
ball centers, pairwise midpoints and a coarse lattice, then local refinement
around the best candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .grid_core import RadialField, RadialGrid, cumulative

FOUR_PI = 4 * math.pi


# ---------------------------------------------------------------------------
# sets

def _vec3(c) -> tuple:
    a = np.asarray(c, dtype=float).reshape(3)
    return tuple(float(v) for v in a)


@dataclass(frozen=True)
class Ball:
    """Closed ball B(center, radius); ``inner > 0`` removes B(center, inner)."""
    center: tuple
    radius: float
    inner: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "inner", float(self.inner))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 0 <= self.inner < self.radius:
            raise ValueError("inner radius must lie in [0, radius)")

    def contains(self, pts) -> np.ndarray:
        d = np.linalg.norm(np.atleast_2d(pts) - np.array(self.center), axis=1)
        return (d <= self.radius) & (d > self.inner if self.inner > 0 else True)

    def translated(self, v) -> "Ball":
        return Ball(np.array(self.center) + np.asarray(v, float), self.radius, self.inner)

    def scaled(self, c: float) -> "Ball":
        return Ball(np.array(self.center) * c, self.radius * c, self.inner * c)


@dataclass(frozen=True)
class BallUnion:
    balls: tuple

    def __post_init__(self):
        object.__setattr__(self, "balls", tuple(self.balls))

    def __len__(self):
        return len(self.balls)

    @property
    def centers(self) -> np.ndarray:
        return np.array([b.center for b in self.balls]).reshape(-1, 3)

    @property
    def radii(self) -> np.ndarray:
        return np.array([b.radius for b in self.balls])

    @property
    def inners(self) -> np.ndarray:
        return np.array([b.inner for b in self.balls])

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        hit = np.zeros(len(pts), dtype=bool)
        for b in self.balls:
            hit |= b.contains(pts)
        return hit

    def translated(self, v) -> "BallUnion":
        return BallUnion(b.translated(v) for b in self.balls)

    def scaled(self, c: float) -> "BallUnion":
        return BallUnion(b.scaled(c) for b in self.balls)

    def union(self, other: "BallUnion") -> "BallUnion":
        return BallUnion(self.balls + other.balls)


@dataclass(frozen=True)
class ChoquetParams:
    """Discretisation of the sup over centers, of the level sets and of the
    quadratures.  Level sets are taken at fmax * 2^(-j/levels_per_octave)
    for j = 0 .. levels_per_octave * octaves."""
    alpha: float = 1.0
    lattice_spacing: float = 0.5
    lattice_max_points: int = 400
    refine_rounds: int = 2
    refine_factor: float = 4.0
    refine_seeds: int = 2
    refine_span: int = 2
    levels_per_octave: int = 8
    octaves: int = 24
    polar_nodes: int = 32
    azimuth_nodes: int = 48
    radial_nodes: int = 300
    s_per_octave: int = 6

    def __post_init__(self):
        if not 0 <= self.alpha < 3:
            raise ValueError("alpha must lie in [0, 3)")
        if self.lattice_spacing <= 0 or self.refine_factor <= 1:
            raise ValueError("lattice spacing must be positive and refine factor > 1")
        if self.levels_per_octave < 1 or self.octaves < 1:
            raise ValueError("need at least one level per octave and one octave")

    @property
    def k_range(self) -> tuple[int, int]:
        """Level exponents (k_min, k_max) in units of 2^(1/levels_per_octave),
        relative to the maximum of the function."""
        return -self.levels_per_octave * self.octaves, 0


# ---------------------------------------------------------------------------
# weighted volume of balls

def _primitive_r(x, alpha):
    """int rho^{2-alpha} d rho."""
    return x ** (3 - alpha) / (3 - alpha)


def ball_kato(d, R: float, alpha: float) -> np.ndarray:
    """int_{B(c,R)} |x-y|^{-alpha} dx as a function of d = |y - c|."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    a3 = 3 - alpha
    out = np.empty_like(d)
    centred = d <= 1e-9 * R
    out[centred] = FOUR_PI * R**a3 / a3
    dd = d[~centred]
    if dd.size:
        full = FOUR_PI * np.clip(R - dd, 0, None) ** a3 / a3
        lo, hi = np.abs(dd - R), dd + R
        sgn = np.sign(R - dd)
        # (R^2 - d^2) int rho^{1-alpha} split so that lo -> 0 stays finite
        if alpha == 2:
            lo_term = np.where(lo > 0, lo * np.log(np.where(lo > 0, lo, 1.0)), 0.0)
            t1 = (R * R - dd * dd) * np.log(hi) - sgn * (R + dd) * lo_term
        else:
            t1 = ((R * R - dd * dd) * hi ** (2 - alpha) - sgn * (R + dd) * lo ** a3) / (2 - alpha)
        t2 = 2 * dd * (hi**a3 - lo**a3) / a3
        t3 = (hi ** (4 - alpha) - lo ** (4 - alpha)) / (4 - alpha)
        out[~centred] = full + math.pi / dd * (t1 + t2 - t3)
    return out


def _ball_piece(b: Ball, ys: np.ndarray, alpha: float) -> np.ndarray:
    d = np.linalg.norm(ys - np.array(b.center), axis=1)
    val = ball_kato(d, b.radius, alpha)
    if b.inner > 0:
        val = val - ball_kato(d, b.inner, alpha)
    return val


def _components(A: BallUnion) -> list[list[int]]:
    """Clusters of balls whose closed outer balls overlap."""
    k = len(A)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    C, R = A.centers, A.radii
    if k > 1:
        dist = np.linalg.norm(C[:, None, :] - C[None, :, :], axis=2)
        ii, jj = np.nonzero(np.triu(dist < R[:, None] + R[None, :], 1))
        for i, j in zip(ii, jj):
            parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _ray_hits(center, R, ys, dirs):
    """Entry/exit distances of rays y + rho*dir through B(center, R).
    Misses come back as the empty interval (0, 0)."""
    v = np.asarray(center) - ys[:, None, None, :]
    b = np.einsum("...k,...k->...", dirs, v)
    disc = R * R - (np.einsum("...k,...k->...", v, v) - b * b)
    root = np.sqrt(np.clip(disc, 0, None))
    lo = np.clip(b - root, 0, None)
    hi = np.clip(b + root, 0, None)
    miss = (disc <= 0) | (hi <= lo)
    return np.where(miss, 0.0, lo), np.where(miss, 0.0, hi)


def _intervals(balls, ys, dirs):
    starts, ends = [], []
    for bl in balls:
        lo, hi = _ray_hits(bl.center, bl.radius, ys, dirs)
        if bl.inner > 0:
            ilo, ihi = _ray_hits(bl.center, bl.inner, ys, dirs)
            hole = ihi > ilo
            starts += [lo, np.where(hole, ihi, lo)]
            ends += [np.where(hole, ilo, hi), np.where(hole, hi, lo)]
        else:
            starts.append(lo)
            ends.append(hi)
    return np.stack(starts, axis=-1), np.stack(ends, axis=-1)


def _union_weight(a, b, alpha):
    """int over the union of intervals [a_i, b_i] of rho^{2-alpha} d rho."""
    order = np.argsort(a, axis=-1)
    a = np.take_along_axis(a, order, axis=-1)
    b = np.take_along_axis(b, order, axis=-1)
    b = np.maximum(a, b)
    reach = np.maximum.accumulate(b, axis=-1)
    prev = np.concatenate([np.zeros(a.shape[:-1] + (1,)), reach[..., :-1]], axis=-1)
    start = np.maximum(a, prev)
    stop = np.maximum(b, start)
    return np.sum(_primitive_r(stop, alpha) - _primitive_r(start, alpha), axis=-1)


def _frame(axis):
    """Orthonormal (e1, e2) completing each row of ``axis``."""
    helper = np.where(np.abs(axis[:, :1]) < 0.9, [[1.0, 0, 0]], [[0, 1.0, 0]])
    e1 = helper - np.sum(helper * axis, axis=1, keepdims=True) * axis
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    return e1, np.cross(axis, e1)


@lru_cache(maxsize=16)
def _gauss(n):
    return leggauss(n)


def _ray_kato(balls, ys, alpha, params: ChoquetParams, chunk: int = 128) -> np.ndarray:
    """Weighted volume of an overlapping cluster.  Ball i contributes the
    part of its rays not already covered by balls 0..i-1; each ball's rays
    are parametrised over the cap it subtends from y, which keeps the
    angular integrand smooth apart from silhouettes of other balls."""
    x, wx = _gauss(params.polar_nodes)
    na = params.azimuth_nodes
    phi = 2 * np.pi * (np.arange(na) + 0.5) / na
    cphi, sphi = np.cos(phi), np.sin(phi)
    total = np.zeros(len(ys))
    for lo_y in range(0, len(ys), chunk):
        yc = ys[lo_y:lo_y + chunk]
        acc = np.zeros(len(yc))
        for i, bl in enumerate(balls):
            v = np.array(bl.center) - yc
            d = np.linalg.norm(v, axis=1)
            axis = np.where(d[:, None] > 0, v / np.where(d > 0, d, 1)[:, None], [[0, 0, 1.0]])
            e1, e2 = _frame(axis)
            inside = d <= bl.radius
            ratio = np.where(inside, 0.0, bl.radius / np.where(d > 0, d, 1))
            psi = (x + 1) * np.pi / 4
            sg_out = ratio[:, None] * np.sin(psi)[None, :]
            cg_out = np.sqrt(1 - sg_out**2)
            w_out = (wx * np.pi / 4)[None, :] * sg_out * ratio[:, None] * np.cos(psi)[None, :] / cg_out
            cg = np.where(inside[:, None], x[None, :], cg_out)
            sg = np.where(inside[:, None], np.sqrt(1 - x**2)[None, :], sg_out)
            wg = np.where(inside[:, None], wx[None, :], w_out)
            ring = cphi[None, :, None] * e1[:, None, :] + sphi[None, :, None] * e2[:, None, :]
            dirs = cg[:, :, None, None] * axis[:, None, None, :] + sg[:, :, None, None] * ring[:, None, :, :]
            a, b = _intervals(balls[:i + 1], yc, dirs)
            val = _union_weight(a, b, alpha)
            if i:
                ncut = sum(2 if q.inner > 0 else 1 for q in balls[:i])
                val = val - _union_weight(a[..., :ncut], b[..., :ncut], alpha)
            acc += np.sum(val.sum(axis=2) * wg, axis=1) * (2 * np.pi / na)
        total[lo_y:lo_y + chunk] = acc
    return total


def kato_values(A: BallUnion, ys, alpha: float, params: ChoquetParams | None = None) -> np.ndarray:
    """I_alpha(A, y) for each row of ``ys``."""
    if not 0 <= alpha < 3:
        raise ValueError("alpha must lie in [0, 3)")
    params = params or ChoquetParams(alpha=alpha)
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    out = np.zeros(len(ys))
    for comp in _components(A):
        if len(comp) == 1:
            out += _ball_piece(A.balls[comp[0]], ys, alpha)
        else:
            out += _ray_kato([A.balls[i] for i in comp], ys, alpha, params)
    return out


def kato_integral(A: BallUnion, y, alpha: float, params: ChoquetParams | None = None) -> float:
    """int_A |x - y|^{-alpha} dx."""
    if not len(A):
        return 0.0
    return float(kato_values(A, np.asarray(y, float)[None, :], alpha, params)[0])


# ---------------------------------------------------------------------------
# sup over centers

def _lattice(lo, hi, spacing, max_points):
    ext = np.maximum(hi - lo, 0.0)
    step = max(spacing, float(ext.max()) / max(max_points - 1, 1))
    while np.prod(np.floor(ext / step) + 1) > max_points:
        step *= 1.25
    counts = (np.floor(ext / step) + 1).astype(int)
    axes = [lo[k] + (ext[k] - (counts[k] - 1) * step) / 2 + step * np.arange(counts[k])
            for k in range(3)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1), step


def candidate_centers(centers, radii, params: ChoquetParams):
    centers = np.atleast_2d(centers)
    pts = [centers]
    k = len(centers)
    if 1 < k <= 64:
        i, j = np.triu_indices(k, 1)
        pts.append(0.5 * (centers[i] + centers[j]))
    lo = (centers - radii[:, None]).min(axis=0)
    hi = (centers + radii[:, None]).max(axis=0)
    grid, step = _lattice(lo, hi, params.lattice_spacing, params.lattice_max_points)
    pts.append(grid)
    return np.concatenate(pts), step


def _local_offsets(step, span=2):
    o = np.arange(-span, span + 1) * step
    mesh = np.meshgrid(o, o, o, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def maximize_over_centers(objective, centers, radii, params: ChoquetParams,
                          polish=None, n_polish: int = 6) -> tuple[float, np.ndarray]:
    """Maximise ``objective(ys)`` over the candidate set with local refinement.

    When ``polish`` is given, ``objective`` is a cheap approximation used for
    the search and the best ``n_polish`` distinct candidates are re-scored
    with ``polish``."""
    ys, step = candidate_centers(centers, radii, params)
    vals = objective(ys)
    for _ in range(params.refine_rounds):
        step /= params.refine_factor
        seeds = ys[np.argsort(-vals)[:params.refine_seeds]]
        local = (seeds[:, None, :] + _local_offsets(step, params.refine_span)[None]).reshape(-1, 3)
        ys, vals = np.concatenate([ys, local]), np.concatenate([vals, objective(local)])
    if polish is not None:
        top = np.unique(ys[np.argsort(-vals)[:4 * n_polish]], axis=0)
        top = top[np.argsort(-objective(top))[:n_polish]]
        ys, vals = top, polish(top)
    k = int(np.argmax(vals))
    return float(vals[k]), ys[k].copy()


@lru_cache(maxsize=8192)
def _outer_measure_cached(A: BallUnion, params: ChoquetParams):
    alpha = params.alpha
    fine = lambda ys: kato_values(A, ys, alpha, params)
    if all(len(c) == 1 for c in _components(A)):
        return maximize_over_centers(fine, A.centers, A.radii, params)
    coarse = replace(params, polar_nodes=max(4, params.polar_nodes // 3),
                     azimuth_nodes=max(6, params.azimuth_nodes // 3))
    return maximize_over_centers(lambda ys: kato_values(A, ys, alpha, coarse),
                                 A.centers, A.radii, params, polish=fine)


def outer_measure(A: BallUnion, params: ChoquetParams) -> tuple[float, np.ndarray]:
    """mu_alpha(A) = sup_y int_A |x-y|^{-alpha} dx and the maximising y."""
    if not len(A):
        return 0.0, np.zeros(3)
    val, arg = _outer_measure_cached(A, params)
    return val, arg.copy()


# ---------------------------------------------------------------------------
# radial profiles and bump functions

@dataclass(frozen=True, eq=False)
class Profile:
    """Radial profile phi(r) from samples on a uniform grid.

    ``interp="linear"`` interpolates between nodes; ``"step"`` reads
    phi = samples[k] on (r_{k-1}, r_k], which represents indicators exactly.
    Beyond the grid the profile is ``tail_coeff * r**(-tail_power)``.
    """
    field: RadialField
    interp: str = "linear"
    tail_coeff: float = 0.0
    tail_power: float = 1.0

    def __post_init__(self):
        if self.interp not in ("linear", "step"):
            raise ValueError(f"unknown interpolation {self.interp!r}")

    @property
    def r(self) -> np.ndarray:
        return self.field.grid.r

    @property
    def values(self) -> np.ndarray:
        return self.field.samples

    @property
    def r_max(self) -> float:
        return self.field.grid.r_max

    @property
    def has_tail(self) -> bool:
        return self.tail_coeff != 0

    def __call__(self, rr) -> np.ndarray:
        rr = np.asarray(rr, dtype=float)
        g, v = self.field.grid, self.values
        if self.interp == "linear":
            out = np.interp(rr, self.r, v, right=0.0)
        else:
            idx = np.ceil(rr / g.h - 1e-9).astype(int)
            out = np.where(idx < g.n, v[np.clip(idx, 0, g.n - 1)], 0.0)
        if self.has_tail:
            far = rr > self.r_max
            out = np.where(far, self.tail_coeff * np.where(far, rr, 1.0) ** -self.tail_power, out)
        return out

    def peak(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))

    def is_nonincreasing(self, rel_tol: float = 1e-12) -> bool:
        v = np.abs(self.values)
        return bool(np.all(np.diff(v) <= rel_tol * max(v.max(initial=0.0), 1e-300)))

    def support_radius(self) -> float:
        if self.has_tail:
            return math.inf
        nz = np.nonzero(self.values)[0]
        if nz.size == 0:
            return 0.0
        k = nz[-1]
        h = self.field.grid.h
        return float(min(self.r[k] + h, self.r_max) if self.interp == "linear" else self.r[k])

    def _crossing(self, k_in, k_out, level):
        """Radius between node k_in (inside) and its neighbour k_out."""
        r, v = self.r, np.abs(self.values)
        a, b = v[k_in], v[k_out]
        frac = (a - level) / (a - b) if a != b else 0.5
        return r[k_in] + (r[k_out] - r[k_in]) * frac

    def _runs(self, mask):
        m = np.concatenate(([False], mask, [False]))
        edges = np.flatnonzero(np.diff(m.astype(int)))
        return edges[::2], edges[1::2] - 1

    def band(self, lo: float, hi: float = math.inf, top_closed: bool = False) -> list[tuple[float, float]]:
        """{r : lo <= |phi(r)| < hi} as (inner, outer) annuli; with
        ``top_closed`` the band is lo < |phi| <= hi instead."""
        v = np.abs(self.values)
        mask = ((v > lo) & (v <= hi)) if top_closed else ((v >= lo) & (v < hi))
        out = []
        starts, stops = self._runs(mask)
        n = v.size
        for a, b in zip(starts, stops):
            if a == 0:
                inner = 0.0
            else:
                level = hi if v[a - 1] >= hi else lo
                inner = self._crossing(a, a - 1, level)
            if b == n - 1:
                outer = self._tail_radius(lo, hi)
            else:
                level = lo if v[b + 1] < lo else hi
                outer = self._crossing(b, b + 1, level)
            if self.interp == "step" and a > 0:
                inner = self.r[a - 1]
            if self.interp == "step" and b < n - 1:
                outer = self.r[b]
            if outer > inner:
                out.append((float(inner), float(outer)))
        return out

    def _tail_radius(self, lo, hi):
        if not self.has_tail:
            return self.r_max
        c, p = abs(self.tail_coeff), self.tail_power
        return max(self.r_max, (c / lo) ** (1 / p)) if lo > 0 else math.inf

    def superlevel(self, t: float) -> list[tuple[float, float]]:
        return self.band(t, math.inf)

    def with_values(self, values, interp=None) -> "Profile":
        return Profile(self.field.with_samples(values), interp or self.interp,
                       self.tail_coeff, self.tail_power)

    def scaled(self, a: float) -> "Profile":
        return Profile(self.field * a, self.interp, self.tail_coeff * a, self.tail_power)

    def dilated(self, c: float) -> "Profile":
        """phi(c r)."""
        g = RadialGrid(self.r_max / c, self.field.grid.n)
        return Profile(RadialField(g, self.values), self.interp,
                       self.tail_coeff * c ** (-self.tail_power), self.tail_power)


def as_profile(p) -> Profile:
    return p if isinstance(p, Profile) else Profile(p)


@dataclass(frozen=True, eq=False)
class Bump:
    center: tuple
    coeff: float
    profile: Profile

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center))
        object.__setattr__(self, "profile", as_profile(self.profile))


@dataclass(frozen=True, eq=False)
class BumpFunction:
    """f(x) = sum_j c_j phi_j(|x - y_j|)."""
    bumps: tuple

    def __post_init__(self):
        bumps = tuple(b if isinstance(b, Bump) else Bump(*b) for b in self.bumps)
        object.__setattr__(self, "bumps", bumps)

    @classmethod
    def single(cls, profile, center=(0, 0, 0), coeff: float = 1.0) -> "BumpFunction":
        return cls((Bump(center, coeff, profile),))

    @classmethod
    def zero(cls) -> "BumpFunction":
        return cls(())

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(len(pts))
        for b in self.bumps:
            out += b.coeff * b.profile(np.linalg.norm(pts - np.array(b.center), axis=1))
        return out

    def __add__(self, other: "BumpFunction") -> "BumpFunction":
        return BumpFunction(self.bumps + other.bumps)

    def __mul__(self, a: float) -> "BumpFunction":
        return BumpFunction(tuple(Bump(b.center, b.coeff * a, b.profile) for b in self.bumps))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    @property
    def centers(self) -> np.ndarray:
        return np.array([b.center for b in self.bumps]).reshape(-1, 3)

    def dilated(self, c: float) -> "BumpFunction":
        """x -> f(c x)."""
        return BumpFunction(tuple(Bump(np.array(b.center) / c, b.coeff, b.profile.dilated(c))
                                  for b in self.bumps))

    def translated(self, v) -> "BumpFunction":
        v = np.asarray(v, float)
        return BumpFunction(tuple(Bump(np.array(b.center) + v, b.coeff, b.profile)
                                  for b in self.bumps))

    def merged(self) -> "BumpFunction":
        """Bumps sharing a center combined into one profile with coefficient 1."""
        groups: dict = {}
        for b in self.bumps:
            key = tuple(round(c, 12) for c in b.center)
            groups.setdefault(key, []).append(b)
        out = []
        for members in groups.values():
            prof = _sum_profiles([(b.coeff, b.profile) for b in members])
            if np.any(prof.values) or prof.has_tail:
                out.append(Bump(members[0].center, 1.0, prof))
        return BumpFunction(tuple(out))

    def sample_points(self, per_bump: int = 64, seed: int = 0) -> np.ndarray:
        """Deterministic points spread over the bump supports."""
        rng = np.random.default_rng(seed)
        pts = []
        for b in self.bumps:
            reach = min(b.profile.support_radius(), 4 * b.profile.r_max)
            dirs = rng.normal(size=(per_bump, 3))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            rad = reach * rng.random(per_bump) ** (1 / 3)
            pts.append(np.array(b.center) + dirs * rad[:, None])
            pts.append(np.array(b.center)[None, :])
        return np.concatenate(pts) if pts else np.zeros((0, 3))

    def supports_overlap(self) -> bool:
        m = self.merged()
        if len(m.bumps) < 2:
            return False
        radii = np.array([b.profile.support_radius() for b in m.bumps])
        A = BallUnion(Ball(b.center, max(r, 1e-300)) for b, r in zip(m.bumps, radii))
        return any(len(c) > 1 for c in _components(A))


def _sum_profiles(items) -> Profile:
    if len(items) == 1:
        c, p = items[0]
        return p.scaled(c)
    h = min(p.field.grid.h for _, p in items)
    r_max = max(p.r_max for _, p in items)
    grid = RadialGrid.with_spacing(h, r_max)
    interp = "step" if all(p.interp == "step" for _, p in items) else "linear"
    vals = sum(c * p(grid.r) for c, p in items)
    tails = {p.tail_power for _, p in items if p.has_tail}
    if len(tails) > 1:
        raise ValueError("cannot merge profiles with different tail powers")
    coeff = sum(c * p.tail_coeff for c, p in items)
    return Profile(RadialField(grid, vals), interp, coeff, tails.pop() if tails else 1.0)


# ---------------------------------------------------------------------------
# level sets, Choquet integral and rearrangement

def level_set(f: BumpFunction, t: float) -> BallUnion:
    """{|f| >= t} approximated by the union of per-bump super-level annuli
    (exact when the merged bumps have disjoint supports)."""
    balls = []
    for b in f.merged().bumps:
        for inner, outer in b.profile.superlevel(t):
            balls.append(Ball(b.center, outer, inner))
    return BallUnion(balls)


def band_set(f: BumpFunction, lo: float, hi: float, top_closed: bool = False) -> BallUnion:
    balls = []
    for b in f.merged().bumps:
        for inner, outer in b.profile.band(lo, hi, top_closed):
            balls.append(Ball(b.center, outer, inner))
    return BallUnion(balls)


def sup_abs(f: BumpFunction) -> float:
    return max((b.profile.peak() for b in f.merged().bumps), default=0.0)


def choquet_levels(f: BumpFunction, params: ChoquetParams) -> np.ndarray:
    """Decreasing levels anchored at max|f|, with every bump peak included."""
    m = f.merged()
    top = sup_abs(m)
    if top == 0:
        return np.zeros(0)
    k_min, k_max = params.k_range
    levels = top * 2.0 ** (np.arange(k_max, k_min - 1, -1) / params.levels_per_octave)
    peaks = [b.profile.peak() for b in m.bumps]
    levels = np.unique(np.concatenate([levels, peaks]))[::-1]
    return levels[levels > 0]


@dataclass(frozen=True)
class Distribution:
    """Sampled u -> mu_alpha({|f| >= u}) on decreasing levels."""
    levels: np.ndarray
    measures: np.ndarray

    def rearrangement(self) -> "Rearrangement":
        keep = self.measures > 0
        return Rearrangement(self.levels[keep], self.measures[keep])


@dataclass(frozen=True)
class Rearrangement:
    """Nonincreasing step function: heights[k] on (measures[k-1], measures[k]]."""
    heights: np.ndarray
    measures: np.ndarray

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.measures, s, side="left")
        h = np.concatenate([self.heights, [0.0]])
        return np.where(s <= 0, h[0] if self.heights.size else 0.0, h[np.minimum(idx, self.heights.size)])


def distribution(f: BumpFunction, params: ChoquetParams) -> Distribution:
    levels = choquet_levels(f, params)
    mu = np.array([outer_measure(level_set(f, t), params)[0] for t in levels])
    mu = np.maximum.accumulate(mu) if mu.size else mu
    return Distribution(levels, mu)


def _check_integrand(f: BumpFunction, require_monotone: bool) -> None:
    pts = f.sample_points()
    if pts.size and np.any(f(pts) < 0):
        raise ValueError("requires nonnegative integrand")
    for b in f.bumps:
        if b.coeff < 0 or np.any(b.profile.values < 0):
            raise ValueError("requires nonnegative integrand")
        if require_monotone and not b.profile.is_nonincreasing():
            raise ValueError("profile must be radially nonincreasing")


def choquet_integral(f: BumpFunction, params: ChoquetParams) -> float:
    """int_0^infty mu_alpha({f >= t}) dt over the level grid (trapezoid in t,
    bottom slab [0, t_min] at the lowest measured level)."""
    _check_integrand(f, require_monotone=True)
    dist = distribution(f, params)
    t, mu = dist.levels, dist.measures
    if t.size == 0:
        return 0.0
    total = np.sum(0.5 * (mu[:-1] + mu[1:]) * (t[:-1] - t[1:])) + mu[-1] * t[-1]
    return float(total)


def choquet_rearrangement(f: BumpFunction, params: ChoquetParams) -> Rearrangement:
    return distribution(f, params).rearrangement()


def _lorentz_from_distribution(dist: Distribution, p: float, q) -> float:
    """||f||_{L^{p,q}} = (p int_0^infty t^{q-1} mu(t)^{q/p} dt)^{1/q}, or
    sup_t t mu(t)^{1/p} for q = infinity."""
    if not 1 <= p < math.inf:
        raise ValueError("Lorentz quasinorm needs 1 <= p < inf")
    t, mu = dist.levels, dist.measures
    if t.size == 0 or not np.any(mu > 0):
        return 0.0
    if q in (math.inf, "inf"):
        return float(np.max(t * mu ** (1 / p)))
    q = float(q)
    mq = mu ** (q / p)
    slabs = (t[:-1] ** q - t[1:] ** q) / q * 0.5 * (mq[:-1] + mq[1:])
    total = p * (np.sum(slabs) + t[-1] ** q / q * mq[-1])
    return float(total ** (1 / q))


def lorentz_choquet_norm(f: BumpFunction, p: float, q, params: ChoquetParams) -> float:
    return _lorentz_from_distribution(distribution(f, params), p, q)


# ---------------------------------------------------------------------------
# Kato norms

def _weighted_mass(f_merged: BumpFunction, y, alpha, s, params: ChoquetParams) -> np.ndarray:
    """Lebesgue measure of {x : |x-y|^{-alpha} |f(x)| >= s} for each s,
    summing the bumps (exact for disjoint supports).  The angular part is
    integrated exactly on spheres around each bump center."""
    m = np.zeros_like(s)
    for b in f_merged.bumps:
        prof = b.profile
        reach = prof.support_radius()
        if not math.isfinite(reach):
            reach = prof.r_max
        if reach <= 0:
            continue
        nr = params.radial_nodes
        rho = (np.arange(nr) + 0.5) * reach / nr
        w = FOUR_PI * rho**2 * reach / nr
        phi = np.abs(prof(rho))
        d = float(np.linalg.norm(np.asarray(y) - np.array(b.center)))
        if alpha == 0:
            frac = (phi[None, :] >= s[:, None]).astype(float)
        else:
            with np.errstate(divide="ignore"):
                L = (phi[None, :] / s[:, None]) ** (1 / alpha)
            if d == 0:
                frac = (rho[None, :] <= L).astype(float)
            else:
                kappa = (rho**2 + d * d - L**2) / (2 * rho * d)
                frac = np.clip((1 - kappa) / 2, 0, 1)
        m += frac @ w
    return m


def _weighted_lorentz(f_merged, y, alpha, p, q, params, s_grid) -> float:
    m = _weighted_mass(f_merged, y, alpha, s_grid, params)
    if not np.any(m > 0):
        return 0.0
    if q in (math.inf, "inf"):
        return float(np.max(s_grid * m ** (1 / p)))
    q = float(q)
    integrand = p * s_grid**q * m ** (q / p)
    total = np.trapezoid(integrand, np.log(s_grid))
    total += (p / q) * s_grid[0] ** q * m[0] ** (q / p)
    pos = np.nonzero(m > 0)[0]
    k1, k2 = pos[-1], pos[-2] if pos.size > 1 else pos[-1]
    if k1 == s_grid.size - 1 and k2 != k1:
        kappa = -math.log(m[k1] / m[k2]) / math.log(s_grid[k1] / s_grid[k2])
        expo = kappa * q / p - q
        if expo <= 0:
            return math.inf
        total += p * m[k1] ** (q / p) * s_grid[k1] ** q / expo
    return float(total ** (1 / q))


def kato_norm_argmax(f: BumpFunction, alpha: float, p: float, q,
                     params: ChoquetParams) -> tuple[float, np.ndarray | None]:
    """sup_y || |x-y|^{-alpha} f ||_{L^{p,q}_x} and the maximising y.

    The sup is searched with a lighter hill climb than the outer measure
    (3x3x3 neighbourhoods, halving the step three times), since every
    candidate costs a full distribution-function evaluation."""
    if alpha * p >= 3:
        return math.inf, None
    m = f.merged()
    if not m.bumps:
        return 0.0, np.zeros(3)
    radii = np.array([min(b.profile.support_radius(), b.profile.r_max) for b in m.bumps])
    scale = max(float(radii.max()), 1e-12)
    s_ref = sup_abs(m) * scale ** (-alpha)
    k = params.s_per_octave
    s_grid = s_ref * 2.0 ** (np.arange(-30 * k, 30 * k + 1) / k)
    search = replace(params, lattice_max_points=min(params.lattice_max_points, 64),
                     refine_factor=2.0, refine_span=1, refine_rounds=3)
    return maximize_over_centers(
        lambda ys: np.array([_weighted_lorentz(m, y, alpha, p, q, params, s_grid) for y in ys]),
        m.centers, radii, search)


def kato_norm(f: BumpFunction, alpha: float, p: float, q, params: ChoquetParams) -> float:
    """sup_y || |x-y|^{-alpha} f ||_{L^{p,q}_x}; infinite when alpha*p >= 3."""
    return kato_norm_argmax(f, alpha, p, q, params)[0]


# ---------------------------------------------------------------------------
# atoms and quasi-triangle inequality

@dataclass(frozen=True, eq=False)
class Atom:
    """a = f * chi_{2^(k-1) < |f| <= 2^k} / coeff, normalised so that
    ||a||_inf^p * mu_alpha(supp a) = 1."""
    band: int
    coeff: float
    support: BallUnion
    function: BumpFunction


def atomic_decompose(f: BumpFunction, p: float, params: ChoquetParams) -> list[Atom]:
    m = f.merged()
    top = sup_abs(m)
    if top == 0:
        return []
    if any(b.profile.has_tail for b in m.bumps):
        raise ValueError("atomic decomposition needs compactly supported profiles")
    floor = top * 2.0 ** (-params.octaves)
    atoms = []
    k = math.ceil(math.log2(top))
    while 2.0**k > floor:
        lo, hi = 2.0 ** (k - 1), 2.0**k
        pieces, height = [], 0.0
        for b in m.bumps:
            v = b.profile.values
            band = (np.abs(v) > lo) & (np.abs(v) <= hi)
            if np.any(band):
                pieces.append(Bump(b.center, 1.0, b.profile.with_values(np.where(band, v, 0.0), "step")))
                height = max(height, float(np.abs(v[band]).max()))
        supp = band_set(m, lo, hi, top_closed=True)
        if pieces and len(supp):
            mu = outer_measure(supp, params)[0]
            c = height * mu ** (1 / p)
            if c > 0:
                atoms.append(Atom(k, c, supp, BumpFunction(tuple(pieces)) * (1 / c)))
        k -= 1
    return atoms


def atomic_quasinorm(atoms: list[Atom], q) -> float:
    c = np.array([a.coeff for a in atoms])
    if c.size == 0:
        return 0.0
    if q in (math.inf, "inf"):
        return float(c.max())
    return float(np.sum(c**q) ** (1 / q))


def lp_choquet_norm(f: BumpFunction, p: float, params: ChoquetParams) -> float:
    """(int |f|^p d mu_alpha)^{1/p}, the L^{p,p} quasinorm."""
    return lorentz_choquet_norm(f, p, p, params)


def quasi_triangle_ratio(f: BumpFunction, g: BumpFunction, p: float, params: ChoquetParams) -> float:
    """||f + g|| / (||f|| + ||g||) in L^p(mu_alpha)."""
    nf, ng = lp_choquet_norm(f, p, params), lp_choquet_norm(g, p, params)
    if nf + ng == 0:
        return 0.0
    return lp_choquet_norm(f + g, p, params) / (nf + ng)


# ---------------------------------------------------------------------------
# fractional integration and the closed-loop map

def _radial_riesz(prof: Profile, beta: float, n_out: int, reach_factor: float = 4.0):
    """Radial profile of phi(|.|) * |x|^{-beta} with a mass * r^{-beta} tail."""
    supp = prof.support_radius()
    if not math.isfinite(supp) or prof.has_tail:
        raise ValueError("fractional integration needs compactly supported profiles")
    supp = max(supp, prof.field.grid.h)
    n_in = max(prof.field.grid.n, 801)
    s_nodes = (np.arange(n_in) + 0.5) * supp / n_in
    ds = supp / n_in
    phi = prof(s_nodes)
    mass = float(FOUR_PI * np.sum(phi * s_nodes**2) * ds)
    out_grid = RadialGrid(reach_factor * supp, n_out)
    r = out_grid.r
    if beta == 1:
        # Newton: (4 pi / r) int_0^r phi s^2 ds + 4 pi int_r^inf phi s ds
        fine = RadialGrid(supp, n_in)
        vals = prof(fine.r)
        inner = cumulative(vals * fine.r**2, fine.h)
        outer = cumulative(vals * fine.r, fine.h)
        inner_r = np.interp(r, fine.r, inner)
        outer_r = outer[-1] - np.interp(r, fine.r, outer)
        pot = np.empty_like(r)
        pot[1:] = FOUR_PI * (inner_r[1:] / r[1:] + outer_r[1:])
        pot[0] = FOUR_PI * outer[-1]
    else:
        rr = r[:, None]
        ss = s_nodes[None, :]
        gap = np.abs(rr - ss)
        # inside the quadrature cell the |r - s| term is singular for beta >= 2;
        # replace it there by its average over the cell
        near = gap < 0.5 * ds
        with np.errstate(divide="ignore", invalid="ignore"):
            if beta == 2:
                lg = np.where(near, math.log(0.5 * ds) - 1.0, np.log(np.where(near, 1.0, gap)))
                kern = 2 * np.pi / (rr * ss) * (np.log(rr + ss) - lg)
            else:
                pw = np.where(near, (0.5 * ds) ** (2 - beta) / (3 - beta),
                              np.where(near, 1.0, gap) ** (2 - beta))
                if beta < 2:
                    pw = gap ** (2 - beta)
                kern = 2 * np.pi * ((rr + ss) ** (2 - beta) - pw) / (rr * ss * (2 - beta))
        # at r = 0 integrate s^(2 - beta) exactly over each cell
        cell = ((s_nodes + 0.5 * ds) ** (3 - beta) - (s_nodes - 0.5 * ds) ** (3 - beta)) / (3 - beta)
        kern[0, :] = FOUR_PI * cell / (s_nodes**2 * ds)
        pot = kern @ (phi * s_nodes**2) * ds
    return Profile(RadialField(out_grid, pot), "linear", mass, beta), mass


class FractionalResult(NamedTuple):
    values: np.ndarray
    potential: BumpFunction


def fractional_integrate(f: BumpFunction, beta: float, eval_centers=None,
                         params: ChoquetParams | None = None, n_out: int = 2049) -> FractionalResult:
    """(f * |x|^{-beta}) at ``eval_centers`` and as a bump function.

    Each bump's potential is radial about its own center, so the result is
    an exact bump-sum re-encoding; beyond four support radii the potential
    is continued by (total mass) * r^{-beta}."""
    if not 0 < beta < 3:
        raise ValueError("beta must lie in (0, 3)")
    out = []
    for b in f.merged().bumps:
        prof, _ = _radial_riesz(b.profile, beta, n_out)
        # match the tail to the last sample so the profile stays continuous
        last = prof.values[-1]
        prof = Profile(prof.field, "linear", last * prof.r_max**beta, beta)
        out.append(Bump(b.center, 1.0, prof))
    pot = BumpFunction(tuple(out))
    vals = pot(np.atleast_2d(eval_centers)) if eval_centers is not None else np.zeros(0)
    return FractionalResult(vals, pot)


def _closed_loop_range(N: int, p: float, alpha: float) -> None:
    if not N + 1 < p < 1.5 * N:
        raise ValueError(f"closed-loop map needs N+1 < p < 3N/2, got p={p}")
    if abs(alpha - (3 - 2 * p / N)) > 1e-9:
        raise ValueError(f"closed-loop map needs alpha = 3 - 2p/N = {3 - 2 * p / N:.6g}")


def closed_loop_map(u: BumpFunction, N: int, params: ChoquetParams | None = None) -> BumpFunction:
    """u -> u^{N+1} * |x|^{-1}, with the power taken bump by bump."""
    m = u.merged()
    if not m.bumps:
        return BumpFunction.zero()
    if m.supports_overlap():
        raise ValueError("closed_loop_map needs bumps with disjoint supports")
    powered = BumpFunction(tuple(
        Bump(b.center, 1.0, b.profile.with_values(b.profile.values ** (N + 1))) for b in m.bumps))
    return fractional_integrate(powered, 1.0, params=params).potential


def contraction_ratio(u1: BumpFunction, u2: BumpFunction, N: int, p: float, alpha: float,
                      params: ChoquetParams) -> float:
    """||M u1 - M u2|| / ||u1 - u2|| in L^{p,infty}(mu_alpha)."""
    _closed_loop_range(N, p, alpha)
    params = replace(params, alpha=alpha)
    den = lorentz_choquet_norm(u1 - u2, p, math.inf, params)
    if den == 0:
        return 0.0
    diff = closed_loop_map(u1, N, params) - closed_loop_map(u2, N, params)
    return lorentz_choquet_norm(diff, p, math.inf, params) / den


# ---------------------------------------------------------------------------
# far-apart bumps

def japanese_sep(dist):
    return np.sqrt(1 + np.asarray(dist, dtype=float) ** 2)


def separation_criterion(centers, alpha: float) -> float:
    """S = sup_j1 sum_{j2 != j1} <y_j2 - y_j1>^{-alpha}."""
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    if len(c) < 2:
        return 0.0
    d = np.linalg.norm(c[:, None, :] - c[None, :, :], axis=2)
    if np.any(d[~np.eye(len(c), dtype=bool)] == 0):
        raise ValueError("centers must be pairwise distinct")
    w = japanese_sep(d) ** (-alpha)
    np.fill_diagonal(w, 0.0)
    return float(w.sum(axis=1).max())


def powerlaw_separation(alpha: float, alpha0: float, J: int = 4096) -> tuple[float, float]:
    """Criterion S for y_j = j^{1/alpha0} e, j >= 1: the partial-sum value over
    j1, j2 <= J (sup over j1 <= J/2) and an upper bound for the neglected
    terms j2 > J."""
    if not alpha0 < alpha:
        raise ValueError("needs alpha0 < alpha for a finite criterion")
    j = np.arange(1, J + 1, dtype=float)
    y = j ** (1 / alpha0)
    rows = np.arange(1, J // 2 + 1)
    best, tail = 0.0, 0.0
    for j1 in rows:
        w = japanese_sep(np.abs(y - y[j1 - 1])) ** (-alpha)
        w[j1 - 1] = 0.0
        s = float(w.sum())
        bound = (1 - (j1 / J) ** (1 / alpha0)) ** (-alpha) * J ** (1 - alpha / alpha0) / (
            alpha / alpha0 - 1)
        if s > best:
            best = s
        tail = max(tail, bound)
    return float(best), float(tail)


class MultibumpResult(NamedTuple):
    norm: float
    criterion: float
    single_norm: float


def multibump_smallness(centers, bump, eps: float, p: float, alpha: float,
                        params: ChoquetParams) -> MultibumpResult:
    """L^{p,infty}(mu_alpha) size of sum_j eps*phi(x - y_j) and the
    separation criterion S."""
    params = replace(params, alpha=alpha)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    S = separation_criterion(centers, alpha)
    prof = as_profile(bump)
    f = BumpFunction(tuple(Bump(c, eps, prof) for c in centers))
    single = BumpFunction.single(prof, centers[0], eps)
    return MultibumpResult(lorentz_choquet_norm(f, p, math.inf, params), S,
                           lorentz_choquet_norm(single, p, math.inf, params))


# ---------------------------------------------------------------------------
# standard profiles

def gaussian_profile(scale: float = 1.0, n: int = 801, cutoff: float = 4.0) -> Profile:
    """exp(-r^2/scale^2) on [0, cutoff*scale], zero beyond."""
    g = RadialGrid(cutoff * scale, n)
    v = np.exp(-(g.r / scale) ** 2)
    v[-1] = 0.0
    return Profile(RadialField(g, v))


def indicator_profile(radius: float = 1.0, n: int = 801) -> Profile:
    g = RadialGrid(radius, n)
    return Profile(RadialField(g, np.ones(n)), "step")


def shell_profile(inner: float, outer: float, n: int = 801) -> Profile:
    g = RadialGrid(outer, n)
    return Profile(RadialField(g, (g.r > inner - 1e-12 * outer).astype(float)), "step")


def profile_from_spec(kind: str, scale: float = 1.0, n: int = 801) -> Profile:
    if kind == "gaussian":
        return gaussian_profile(scale, n)
    if kind == "indicator":
        return indicator_profile(scale, n)
    if kind == "shell":
        return shell_profile(0.5 * scale, scale, n)
    raise ValueError(f"unknown profile {kind!r}")
