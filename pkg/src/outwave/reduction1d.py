"""The map T(u) = (1/2pi)(r u)' between radial 3D fields and half-line fields.

Derivatives of r*u are taken with :func:`grid_core.trapezoid_derivative`,
the exact discrete inverse of the cumulative trapezoid rule used by
``inverse_T``.  Both maps are second order, and their composition is the
identity up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid_core import (RadialField, ResolutionError, cumulative,
                        trapezoid_derivative, trapezoid_weights)

TWO_PI = 2 * np.pi


@dataclass(frozen=True, eq=False)
class HalfLineField(RadialField):
    """v(r) on [0, r_max], read as zero for r < 0."""


def d_ru(u: RadialField) -> np.ndarray:
    """Samples of (r u)' with the r=0 value set to the limit u(0)."""
    if u.grid.n < 3:
        raise ResolutionError("insufficient resolution")
    return trapezoid_derivative(u.grid.r * u.samples, u.grid.h, u.samples[0])


def forward_T(u: RadialField) -> HalfLineField:
    return HalfLineField(u.grid, d_ru(u) / TWO_PI)


def divide_by_r(z: np.ndarray, r: np.ndarray, at_origin: float) -> np.ndarray:
    out = np.empty_like(z)
    out[1:] = z[1:] / r[1:]
    out[0] = at_origin
    return out


def inverse_T(v: RadialField) -> RadialField:
    z = TWO_PI * cumulative(v.samples, v.grid.h)
    return RadialField(v.grid, divide_by_r(z, v.grid.r, TWO_PI * v.samples[0]))


def equivalent_h1_seminorm(u: RadialField) -> float:
    """L^2(dr) norm of (r u)'."""
    g = d_ru(u)
    return float(np.sqrt(np.dot(trapezoid_weights(u.grid), g**2)))
