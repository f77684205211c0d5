"""Outgoing/incoming projections of radial data pairs.

With A f = (1/r) int_0^r s f(s) ds and B u = u_r + u/r = (1/r)(r u)',

    P+(u0, u1) = ( (u0 - A u1)/2, (-B u0 + u1)/2 )
    P-(u0, u1) = ( (u0 + A u1)/2, ( B u0 + u1)/2 ).

A and B are discretised as mutually inverse operators (cumulative trapezoid
and its exact inverse difference), so the projection identities hold on the
grid to rounding away from the origin.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid_core import RadialField, StatePair, cumulative, radial_weights
from .reduction1d import d_ru, divide_by_r


class SingularOriginWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    out_part: StatePair
    in_part: StatePair
    residual: float
    warnings: tuple = field(default=())


def antiderivative_weighted(u1: RadialField) -> RadialField:
    """(1/r) int_0^r s u1(s) ds, zero at the origin."""
    r = u1.grid.r
    z = cumulative(r * u1.samples, u1.grid.h)
    return u1.with_samples(divide_by_r(z, r, 0.0))


def _origin_is_singular(u0: RadialField) -> bool:
    scale = np.abs(u0.samples).max(initial=0.0)
    return scale > 0 and abs(u0.samples[0]) > 1e-12 * scale


def radial_b(u0: RadialField, warn: bool = True) -> RadialField:
    """u_r + u/r.  At r=0 the L'Hopital value 2 u'(0) is used; this is the
    true limit only when u(0) = 0, otherwise a warning is raised."""
    if warn and _origin_is_singular(u0):
        warnings.warn("singular-origin: u0(0) != 0, so u0/r is unbounded at r=0",
                      SingularOriginWarning, stacklevel=3)
    h = u0.grid.h
    at0 = 2 * (u0.samples[1] - u0.samples[0]) / h
    return u0.with_samples(divide_by_r(d_ru(u0), u0.grid.r, at0))


def outgoing_velocity(u0: RadialField) -> RadialField:
    """The velocity that makes (u0, u1) outgoing: u1 = -u0_r - u0/r."""
    return -radial_b(u0)


def _parts(s: StatePair, sign: int, warn: bool = True) -> StatePair:
    a = antiderivative_weighted(s.vel)
    b = radial_b(s.pos, warn=warn)
    return StatePair(0.5 * (s.pos - sign * a), 0.5 * (s.vel - sign * b))


def project_out(s: StatePair) -> StatePair:
    return _parts(s, +1)


def project_in(s: StatePair) -> StatePair:
    return _parts(s, -1)


def l2(f: RadialField) -> float:
    return float(np.sqrt(np.dot(radial_weights(f.grid), f.samples**2)))


def pair_norm(s: StatePair) -> float:
    """L^2 x L^2 size of a pair, used for relative residuals."""
    return float(np.hypot(l2(s.pos), l2(s.vel)))


def project(s: StatePair) -> ProjectionResult:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SingularOriginWarning)
        out = project_out(s)
        inc = _parts(s, -1, warn=False)
    base = max(pair_norm(s), np.finfo(float).tiny)
    residual = pair_norm(out + inc - s) / base
    notes = tuple(sorted({str(w.message).split(":")[0] for w in caught}))
    return ProjectionResult(out, inc, residual, notes)


def is_outgoing(s: StatePair, tol: float) -> tuple[bool, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularOriginWarning)
        mismatch = s.vel + radial_b(s.pos)
    residual = l2(mismatch) / max(l2(s.vel), np.finfo(float).eps)
    return residual <= tol, residual
