import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from outwave.grid_core import RadialField, RadialGrid, StatePair
from outwave.projections import (SingularOriginWarning, is_outgoing, outgoing_velocity,
                                 pair_norm, project, project_in, project_out)

GRID = RadialGrid(16.0, 2049)


def pair(c0, w0, a0, c1, w1, a1):
    r = GRID.r
    return StatePair(RadialField(GRID, a0 * np.exp(-((r - c0) / w0) ** 2)),
                     RadialField(GRID, a1 * np.exp(-((r - c1) / w1) ** 2)))


pairs = st.builds(pair, st.floats(2.5, 4.5), st.floats(0.25, 0.5), st.floats(-2, 2),
                  st.floats(2.5, 4.5), st.floats(0.25, 0.5), st.floats(-2, 2))


@given(pairs)
def test_projections_sum_to_identity(s):
    if pair_norm(s) == 0:
        return
    assert project(s).residual <= 1e-12


@given(pairs)
def test_projections_are_idempotent_and_complementary(s):
    n = pair_norm(s)
    if n == 0:
        return
    po, pi = project_out(s), project_in(s)
    assert pair_norm(project_out(po) - po) <= 1e-8 * n
    assert pair_norm(project_in(pi) - pi) <= 1e-8 * n
    assert pair_norm(project_out(pi)) <= 1e-8 * n


def test_outgoing_pair_is_fixed_by_P_plus(bump_pair):
    s = StatePair(bump_pair.pos, outgoing_velocity(bump_pair.pos))
    assert pair_norm(project_out(s) - s) <= 1e-10 * pair_norm(s)
    assert pair_norm(project_in(s)) <= 1e-10 * pair_norm(s)
    ok, res = is_outgoing(s, 1e-10)
    assert ok and res < 1e-10


def test_zero_velocity_is_not_outgoing(bump_pair):
    s = StatePair(bump_pair.pos, RadialField(bump_pair.grid, np.zeros(bump_pair.grid.n)))
    ok, _ = is_outgoing(s, 1e-3)
    assert not ok


def test_singular_origin_is_flagged():
    g = RadialGrid(8.0, 513)
    s = StatePair(RadialField(g, np.exp(-g.r**2)), RadialField(g, np.zeros(g.n)))
    res = project(s)
    assert "singular-origin" in res.warnings
    with pytest.warns(SingularOriginWarning):
        project_out(s)


def test_no_warning_when_origin_vanishes(bump_pair):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        project_out(bump_pair)
