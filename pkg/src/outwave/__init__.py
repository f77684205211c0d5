"""Outgoing radial waves for the energy-supercritical equation
u_tt - Delta u +- |u|^N u = 0 in three dimensions, with Choquet-type
function spaces for non-radial multi-bump data."""

from .grid_core import RadialField, RadialGrid, SpaceTimeField, StatePair
from .nonlinear import SolverConfig, picard_solve, reference_solve
from .projections import outgoing_velocity, project

__version__ = "0.1.0"

__all__ = [
    "RadialField", "RadialGrid", "SpaceTimeField", "StatePair", "SolverConfig",
    "outgoing_velocity", "picard_solve", "project", "reference_solve",
]
