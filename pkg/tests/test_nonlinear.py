import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from outwave.freeflow import propagate_free
from outwave.grid_core import RadialField, RadialGrid, StatePair, support_radius
from outwave.nonlinear import (BlowUp, CFLError, SolverConfig, local_existence_probe,
                               parse_sign, picard_solve, reference_solve, scattering_defect,
                               scattering_state)
from outwave.norms import energy
from outwave.projections import outgoing_velocity


def outgoing_gaussian(grid, c=3.0, w=0.5, a=1.0):
    # keep u0(0) at rounding level so the origin is regular
    u0 = RadialField(grid, a * np.exp(-((grid.r - c) / w) ** 2))
    return StatePair(u0, outgoing_velocity(u0))


def cfg_for(grid, T=1.0, cfl=1.0, **kw):
    kw.setdefault("N", 6)
    kw.setdefault("sign", +1)
    return SolverConfig(T=T, dt=grid.h * cfl, grid=grid, **kw)


@pytest.mark.parametrize("sign,expected", [("+", 1), ("defocusing", 1), (-1, -1), ("focusing", -1)])
def test_parse_sign(sign, expected):
    assert parse_sign(sign) == expected


def test_parse_sign_rejects_junk():
    with pytest.raises(ValueError):
        parse_sign("sideways")


def test_config_checks():
    g = RadialGrid(4.0, 101)
    with pytest.raises(CFLError):
        SolverConfig(N=6, sign=1, T=1.0, dt=2 * g.h, grid=g)
    with pytest.raises(ValueError):
        SolverConfig(N=1, sign=1, T=1.0, dt=g.h, grid=g)
    with pytest.raises(ValueError):
        SolverConfig(N=6, sign=1, T=0.0, dt=g.h, grid=g)


def test_forcing_variants():
    g = RadialGrid(1.0, 3)
    u = np.array([-2.0, 0.0, 2.0])
    odd = SolverConfig(N=2, sign=1, T=1, dt=0.5, grid=g).forcing(u)
    plain = SolverConfig(N=2, sign=1, T=1, dt=0.5, grid=g, plain_power=True).forcing(u)
    assert np.array_equal(odd, [8.0, 0.0, -8.0])
    assert np.array_equal(plain, [8.0, 0.0, -8.0])
    plain3 = SolverConfig(N=3, sign=-1, T=1, dt=0.5, grid=g, plain_power=True).forcing(u)
    assert np.array_equal(plain3, [16.0, 0.0, 16.0])


def test_zero_data_stays_zero():
    g = RadialGrid(4.0, 201)
    cfg = cfg_for(g)
    assert not np.any(reference_solve(StatePair.zeros(g), cfg).samples)
    u, trace = picard_solve(StatePair.zeros(g), None, cfg)
    assert not np.any(u.samples)
    assert trace.converged and trace.iterations == 1


def test_reference_linear_mode_converges_second_order():
    errs = []
    for n in (1025, 2049):
        g = RadialGrid(12.0, n)
        s = outgoing_gaussian(g, 4.0, 0.75, 0.5)
        cfg = cfg_for(g, T=3.0, cfl=0.5, coupling=0.0)
        u = reference_solve(s, cfg)
        exact = propagate_free(s, float(u.times[-1])).pos.samples
        errs.append(np.abs(u.samples[:, -1] - exact).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)


def test_linear_time_reversal():
    g = RadialGrid(12.0, 2049)
    s = outgoing_gaussian(g, 4.5, 0.75)
    cfg = cfg_for(g, T=2.0, cfl=0.5, coupling=0.0)
    u, v = reference_solve(s, cfg, return_velocity=True)
    back = StatePair(u.at(u.times.size - 1), -v.at(v.times.size - 1))
    u2 = reference_solve(back, cfg)
    assert np.abs(u2.samples[:, -1] - s.pos.samples).max() < 1e-3


@pytest.mark.parametrize("solver", ["reference", "picard"])
def test_finite_propagation_speed(solver):
    g = RadialGrid(10.0, 1001)
    u0 = RadialField(g, np.where(np.abs(g.r - 3) < 0.5, np.cos(np.pi * (g.r - 3)) ** 2, 0.0))
    s = StatePair(u0, RadialField(g, np.zeros(g.n)))
    cfg = cfg_for(g, T=2.0)
    if solver == "reference":
        u = reference_solve(s, cfg)
    else:
        u, _ = picard_solve(s, None, cfg)
    r0 = support_radius(u0.samples, g)
    for j in range(0, u.times.size, 25):
        assert support_radius(u.samples[:, j], g, 1e-12) <= r0 + u.times[j] + 2 * g.h + 1e-12


def test_defocusing_energy_is_conserved():
    g = RadialGrid(10.0, 2049)
    s = outgoing_gaussian(g, 3.0, 0.4, 0.8)
    cfg = cfg_for(g, T=3.0, cfl=0.5)
    u, v = reference_solve(s, cfg, return_velocity=True)
    e = [energy(StatePair(u.at(j), v.at(j)), 6, 1) for j in range(0, u.times.size, 50)]
    assert max(abs(x / e[0] - 1) for x in e) < 1e-3


def test_focusing_large_data_blows_up():
    g = RadialGrid(4.0, 401)
    u0 = RadialField(g, 3.0 * np.exp(-g.r**2))
    with pytest.raises(BlowUp, match="solution blew up at t="):
        reference_solve(StatePair(u0, RadialField(g, np.zeros(g.n))), cfg_for(g, T=2.0, sign=-1, N=4))


def test_picard_small_data_contracts_geometrically():
    g = RadialGrid(8.0, 2049)
    s = outgoing_gaussian(g, 3.0, 0.5, 0.6)
    u, trace = picard_solve(s, None, cfg_for(g, T=2.0, tol=1e-14))
    r = trace.ratios
    assert trace.converged
    assert len(r) >= 3 and max(r) < 1
    # no later ratio exceeds the first by more than 20%, so the deltas stay
    # under the geometric envelope delta_1 * (1.2 r_1)^k
    assert max(r) <= 1.2 * r[0], r
    d = trace.deltas
    assert all(d[k] <= d[0] * (1.2 * r[0]) ** k for k in range(len(d)) if d[k] > 0)


def test_picard_doubling_amplitude_still_converges():
    g = RadialGrid(8.0, 2049)
    for a in (0.3, 0.6):
        _, trace = picard_solve(outgoing_gaussian(g, 3.0, 0.5, a), None, cfg_for(g, T=2.0))
        assert trace.converged


def test_picard_agrees_with_reference():
    g = RadialGrid(8.0, 2049)
    s = outgoing_gaussian(g, 4.2, 0.6, 0.5)
    cfg = cfg_for(g, T=2.0)
    u, _ = picard_solve(s, None, cfg)
    ref = reference_solve(s, cfg)
    assert np.abs(u.samples - ref.samples).max() / np.abs(ref.samples).max() < 1e-3


def test_picard_trace_invariants():
    g = RadialGrid(8.0, 1025)
    _, trace = picard_solve(outgoing_gaussian(g, 3.0, 0.5, 0.5), None, cfg_for(g, T=1.0))
    assert all(d >= 0 for d in trace.deltas)
    assert trace.deltas[-1] <= trace.threshold
    d = trace.to_dict()
    assert d["converged"] and math.isfinite(d["L^{N/2}_t L^inf_x"])


def test_picard_with_perturbation_only():
    g = RadialGrid(8.0, 1025)
    s = outgoing_gaussian(g, 3.0, 0.5, 0.3)
    cfg = cfg_for(g, T=1.0)
    a, _ = picard_solve(s, None, cfg)
    b, _ = picard_solve(StatePair.zeros(g), s, cfg)
    assert np.allclose(a.samples, b.samples, atol=1e-12)


def test_scattering_state_of_zero_and_linear():
    g = RadialGrid(8.0, 513)
    cfg = cfg_for(g, T=1.0)
    z, _ = picard_solve(StatePair.zeros(g), None, cfg)
    w = outgoing_gaussian(g, 3.0, 0.5, 0.2)
    res = scattering_state(z, cfg, w)
    assert np.array_equal(res.state.pos.samples, w.pos.samples)
    assert np.array_equal(res.state.vel.samples, w.vel.samples)
    lin = cfg_for(g, T=1.0, coupling=0.0)
    u, _ = picard_solve(w, None, lin)
    res = scattering_state(u, lin, w)
    assert np.array_equal(res.state.pos.samples, w.pos.samples)
    assert res.tail_norm == 0.0


@pytest.mark.slow
def test_scattering_defect_decreases_with_horizon():
    g = RadialGrid(40.0, 2049)
    s = outgoing_gaussian(g, 3.0, 0.5, 0.6)
    defects = []
    for T in (2.0, 4.0, 8.0):
        cfg = cfg_for(g, T=T)
        u, _ = picard_solve(s, None, cfg)
        w_plus = scattering_state(u, cfg).state
        defects.append(scattering_defect(u, s, w_plus, u.times.size - 1))
    assert defects[0] > defects[1] > defects[2]


def test_local_existence_probe_small_amplitude_converges():
    g = RadialGrid.with_spacing(1 / 64, 8.0)
    s = outgoing_gaussian(g, 2.4, 0.4)
    rows = local_existence_probe(s, 6, [0.2], amplitudes=(0, 1, 2))
    assert all(r["converged"] for r in rows)
    assert [r["a"] for r in rows] == [0.0, 1.0, 2.0]
    assert rows[1]["T"] == pytest.approx(0.2)


def test_local_existence_probe_needs_outgoing_data():
    g = RadialGrid(8.0, 257)
    u0 = RadialField(g, np.exp(-((g.r - 3) / 0.5) ** 2))
    with pytest.raises(ValueError, match="outgoing"):
        local_existence_probe(StatePair(u0, RadialField(g, np.zeros(g.n))), 6, [0.1])
