import numpy as np
import pytest
from hypothesis import given, strategies as st

from outwave.freeflow import (DomainTooSmall, DuhamelStream, dalembert_halfline, duhamel,
                              duhamel_all, outgoing_closed_form, propagate_free,
                              sine_propagator)
from outwave.grid_core import RadialField, RadialGrid, SpaceTimeField, StatePair
from outwave.norms import energy, lp_norm
from outwave.projections import outgoing_velocity
from outwave.reduction1d import HalfLineField


def kirchhoff_gaussian(r, t, c, w):
    """Free solution with u0 = exp(-((r-c)/w)^2) (extended evenly) and u1 = 0:
    r u = ((r-t) g(r-t) + (r+t) g(r+t)) / 2."""
    def g(s):
        return np.exp(-((np.abs(s) - c) / w) ** 2)
    out = np.zeros_like(r)
    out[1:] = ((r[1:] - t) * g(r[1:] - t) + (r[1:] + t) * g(r[1:] + t)) / (2 * r[1:])
    return out


@pytest.mark.parametrize("t", [0.5, 1.7, 3.0])
def test_zero_velocity_matches_dalembert_formula(t):
    g = RadialGrid(16.0, 4097)
    u0 = RadialField(g, np.exp(-((g.r - 5) / 0.6) ** 2))
    s = StatePair(u0, RadialField(g, np.zeros(g.n)))
    u = propagate_free(s, t).pos.samples
    exact = kirchhoff_gaussian(g.r, t, 5.0, 0.6)
    assert np.abs(u[1:] - exact[1:]).max() < 1e-6


def test_sine_propagator_of_gaussian():
    # (1/2r) int_{|r-t|}^{r+t} s e^{-s^2} ds = (e^{-(r-t)^2} - e^{-(r+t)^2}) / (4 r)
    g = RadialGrid(12.0, 4097)
    f = RadialField(g, np.exp(-g.r**2))
    t = 2.0
    out = sine_propagator(f, t).samples
    r = g.r[1:]
    exact = (np.exp(-(r - t) ** 2) - np.exp(-(r + t) ** 2)) / (4 * r)
    assert np.abs(out[1:] - exact).max() < 1e-6
    assert out[0] == pytest.approx(t * np.exp(-t**2), rel=1e-4)


def test_sine_propagator_at_zero_time_vanishes(grid):
    f = RadialField(grid, np.ones(grid.n))
    assert not np.any(sine_propagator(f, 0.0).samples)


def test_outgoing_closed_form_is_a_shift():
    g = RadialGrid.with_spacing(1 / 64, 12.0)
    u0 = RadialField(g, np.exp(-((g.r - 3) / 0.5) ** 2))
    t = 2.0
    u = outgoing_closed_form(u0, t).samples
    k = 128
    expect = np.zeros(g.n)
    expect[k + 1:] = (g.r[1:-k] / g.r[k + 1:]) * u0.samples[1:-k]
    assert np.abs(u - expect).max() < 1e-14


@given(st.floats(0.0, 6.0))
def test_outgoing_data_keeps_l2_and_energy(t):
    g = RadialGrid(16.0, 2049)
    u0 = RadialField(g, np.exp(-((g.r - 3) / 0.5) ** 2))
    s = StatePair(u0, outgoing_velocity(u0))
    st_ = propagate_free(s, t)
    assert lp_norm(st_.pos, 2) == pytest.approx(lp_norm(u0, 2), rel=1e-6)
    assert energy(st_, 6, 1, coupling=0.0) == pytest.approx(energy(s, 6, 1, coupling=0.0), rel=1e-4)


def test_linear_and_spectral_shifts_agree_for_smooth_data():
    g = RadialGrid(16.0, 4097)
    u0 = RadialField(g, np.exp(-((g.r - 4) / 0.7) ** 2))
    s = StatePair(u0, RadialField(g, np.zeros(g.n)))
    a = propagate_free(s, 1.2345, "spectral").pos.samples
    b = propagate_free(s, 1.2345, "linear").pos.samples
    assert np.abs(a - b).max() < 1e-4


def test_domain_check():
    g = RadialGrid(5.0, 501)
    u0 = RadialField(g, np.exp(-((g.r - 3) / 0.3) ** 2))
    with pytest.raises(DomainTooSmall, match="domain too small"):
        propagate_free(StatePair(u0, RadialField(g, np.zeros(g.n))), 4.0)


def test_negative_time_rejected(bump_pair):
    with pytest.raises(ValueError):
        propagate_free(bump_pair, -1.0)


def test_halfline_dalembert_even_reflection():
    g = RadialGrid(10.0, 1001)
    v0 = HalfLineField(g, np.exp(-((g.r - 5) / 0.5) ** 2))
    v1 = HalfLineField(g, np.zeros(g.n))
    v = dalembert_halfline(v0, v1, 2.0).samples
    exact = 0.5 * (np.exp(-((g.r - 7) / 0.5) ** 2) + np.exp(-((g.r - 3) / 0.5) ** 2))
    assert np.abs(v - exact).max() < 1e-12


@given(st.integers(1, 3), st.integers(0, 2**31))
def test_streaming_duhamel_equals_direct_sum(m, seed):
    rng = np.random.default_rng(seed)
    g = RadialGrid(8.0, 129)
    times = np.arange(9) * m * g.h
    bumps = rng.uniform(1.5, 3.0, size=times.size)
    F = np.stack([np.exp(-((g.r - b) / 0.4) ** 2) for b in bumps], axis=1)
    field = SpaceTimeField(g, times, F)
    stream = DuhamelStream(g, m * g.h)
    for j in range(times.size):
        w = stream.push(F[:, j])
        direct = duhamel(field, j).samples
        assert np.abs(w - direct).max() <= 1e-12 * max(1.0, np.abs(direct).max())


def test_duhamel_all_handles_irregular_times():
    g = RadialGrid(6.0, 121)
    times = np.array([0.0, 0.07, 0.2, 0.31])
    F = SpaceTimeField(g, times, np.outer(np.exp(-((g.r - 2) / 0.4) ** 2), np.ones(4)))
    w = duhamel_all(F)
    assert not np.any(w.samples[:, 0])
    assert np.allclose(w.samples[:, 3], duhamel(F, 3).samples)


def test_duhamel_stream_rejects_misaligned_dt():
    with pytest.raises(ValueError):
        DuhamelStream(RadialGrid(1.0, 11), 0.05)
