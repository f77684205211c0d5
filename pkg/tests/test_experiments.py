import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from outwave import experiments as ex
from outwave.grid_core import RadialField, RadialGrid
from outwave.norms import lp_norm
from outwave.projections import is_outgoing


def small_shell_doc(**solver):
    base = {"N": 6, "T": 0.5, "grid_n": 1025, "r_max": 5.0, "method": "picard"}
    base.update(solver)
    return {"scenario": {"kind": "outgoing_shell", "inner": 2.0, "outer": 3.0, "width": 1.0,
                         "amplitude": 0.01},
            "solver": base, "diagnostics": {"list": ["smallness", "projection"]}}


# --- data builders -----------------------------------------------------------

def test_erf_window_half_height_at_edges():
    r = np.array([1.0, 2.0, 1.5])
    w = ex.erf_window(r, 1.0, 2.0, 0.01)
    np.testing.assert_allclose(w, [0.5, 0.5, 1.0], atol=1e-12)


def test_c1_window_is_flat_inside_and_zero_outside():
    r = np.linspace(0, 4, 401)
    w = ex.c1_window(r, 1.0, 3.0, 0.5)
    assert np.all(w[(r >= 1.25) & (r <= 2.75)] == 1.0)
    assert np.all(w[(r <= 0.75) | (r >= 3.25)] == 0.0)


def test_unknown_shell_variant():
    with pytest.raises(ex.ConfigError, match="variant"):
        ex.shell_profile(RadialGrid(4.0, 101), 1, 2, 1.0, 0.1, "triangle")


@pytest.mark.parametrize("eps", [2**-4, 2**-6])
def test_sharp_shell_lpc_matches_closed_form(eps):
    s = ex.make_outgoing_shell(1.0, eps, 0.1, ramp=0.0)
    assert lp_norm(s.pos, 9) == pytest.approx(ex._shell_lpc(1.0, eps, 0.1, 6), rel=1e-2)


@given(st.floats(0.0, 0.5))
@settings(max_examples=10)
def test_shell_height_scales_as_eps_power(alpha):
    s1 = ex.make_outgoing_shell(1.0, 2**-4, alpha)
    s2 = ex.make_outgoing_shell(1.0, 2**-5, alpha)
    assert s2.pos.samples.max() / s1.pos.samples.max() == pytest.approx(2**alpha, rel=1e-9)


def test_smoothed_shell_is_outgoing():
    s = ex.make_outgoing_shell(1.0, 2**-3, 0.1)
    ok, mismatch = is_outgoing(s, 1e-6)
    assert ok, mismatch


@pytest.mark.parametrize("kw", [{"eps": 1.5}, {"ramp": 0.5}])
def test_shell_argument_checks(kw):
    args = {"L": 1.0, "eps": 0.1, "alpha": 0.1}
    args.update(kw)
    with pytest.raises(ex.ConfigError):
        ex.make_outgoing_shell(**args)


def test_far_support_smallness_scaling():
    g = RadialGrid(1.0, 257)
    prof = RadialField(g, ex.erf_window(g.r, 0.25, 0.75, 0.15))
    a = ex.make_far_support(prof, 10.0)
    b = ex.make_far_support(prof, 20.0)
    # the gradient norm grows like (R + m)^2 for a mean radius m inside the
    # profile, and the weight contributes R^(4/N - 1) = R^(-1/3)
    lo = ((20.25 / 10.25) ** 2) * 2 ** (-1 / 3)
    hi = ((20.75 / 10.75) ** 2) * 2 ** (-1 / 3)
    assert min(lo, hi) <= b.smallness / a.smallness <= max(lo, hi)


@pytest.mark.parametrize("R", [4.0, 8.0, 16.0])
def test_far_support_radial_sobolev_bound(R):
    # |u(r)| <= (4 pi r)^(-1/2) ||grad u||_2 for radial u, by Cauchy-Schwarz
    from outwave.norms import gradient_norm
    g = RadialGrid(1.0, 257)
    prof = RadialField(g, ex.erf_window(g.r, 0.25, 0.75, 0.15))
    u = ex.make_far_support(prof, R).state.pos
    C = np.max(np.sqrt(u.grid.r) * np.abs(u.samples)) / gradient_norm(u)
    assert 0 < C <= 1 / math.sqrt(4 * math.pi)


def test_far_support_zero_profile():
    g = RadialGrid(1.0, 65)
    data = ex.make_far_support(RadialField(g, np.zeros(g.n)), 5.0)
    assert data.smallness == 0.0
    assert not np.any(data.state.pos.samples)


def test_bounded_ball_is_at_rest():
    s = ex.make_bounded_ball(0.3, 2.0, width=0.1)
    assert s.pos.samples[0] == pytest.approx(0.3)
    assert not np.any(s.vel.samples)


def test_multiscale_lpc_adds_up():
    grid = RadialGrid(5 * 64.0 + 4, 2**16 + 1)
    amp = 0.05

    def phi(x):
        return amp * np.exp(-((x - 2.0) / 0.5) ** 2)

    scales = [1.0, 8.0, 64.0]
    s = ex.make_multiscale(phi, np.zeros_like, scales, 6, grid)
    base = lp_norm(RadialField(grid, phi(grid.r)), 9) ** 9
    assert lp_norm(s.pos, 9) ** 9 / (3 * base) == pytest.approx(1.0, rel=0.15)


def test_multiscale_needs_increasing_scales():
    with pytest.raises(ex.ConfigError, match="increasing"):
        ex.make_multiscale(np.exp, np.exp, [2.0, 1.0], 6, RadialGrid(4.0, 65))


def test_multibump_radial_flag_and_criterion():
    from outwave import choquet as cq
    prof = cq.gaussian_profile()
    far = ex.make_multibump(prof, prof, [[0, 0, 0], [100, 0, 0]], alpha=1.0)
    assert not far.radial
    assert far.criterion == pytest.approx((1 + 100.0**2) ** -0.5)
    one = ex.make_multibump(prof, prof, [[0, 0, 0]])
    assert one.radial and one.criterion == 0.0


# --- fits and reports ----------------------------------------------------------

def test_ols_fit_recovers_exact_line():
    x = np.linspace(0, 1, 7)
    fit = ex.ols_fit(x, 3 * x - 2)
    assert fit.slope == pytest.approx(3.0)
    assert fit.intercept == pytest.approx(-2.0)
    assert fit.half_width < 1e-6  # residuals at rounding level; stderr ~ sqrt(eps)


def test_ols_fit_half_width_matches_scipy():
    from scipy import stats
    rng = np.random.default_rng(1)
    x = np.arange(10.0)
    y = 0.5 * x + rng.normal(size=10)
    res = stats.linregress(x, y)
    fit = ex.ols_fit(x, y)
    assert fit.half_width == pytest.approx(stats.t.ppf(0.975, 8) * res.stderr)


def test_sweep_slope_for_flat_height():
    # alpha = 0: the source has fixed height on a shell of width eps, so the
    # Duhamel norms scale linearly in eps
    rep = ex.run_shell_sweep(6, 0.0, 1.0, [2**-3, 2**-4, 2**-5, 2**-6],
                             ex.SweepConfig(horizon=1.5), picard=False)
    assert rep.fits["weighted_l1t"].slope == pytest.approx(1.0, abs=0.1)
    assert rep.fits["weighted_sup"].slope == pytest.approx(1.0, abs=0.1)
    assert rep.passed


def test_sweep_flags_alpha_outside_regime():
    rep = ex.run_shell_sweep(6, 0.2, 1.0, [2**-3, 2**-4, 2**-5], ex.SweepConfig(horizon=1.0),
                             picard=False)
    assert any("contraction regime" in e for e in rep.errors)
    assert not rep.passed


def test_report_json_is_deterministic(tmp_path):
    sc = ex.scenario_from_dict(small_shell_doc())
    docs = []
    for k in range(2):
        ex.emit_report(ex.run_experiment(sc), tmp_path / str(k))
        doc = json.loads((tmp_path / str(k) / "report.json").read_text())
        doc.pop("created")
        docs.append(doc)
    assert docs[0] == docs[1]
    assert docs[0]["schema"] == ex.SCHEMA


def test_emit_writes_series_and_plots(tmp_path):
    rep = ex.ExperimentReport(scenario={"kind": "demo"})
    rep.series = {"t": [0.0, 1.0], "y": [2.0]}
    rep.plots = {"curve": [(0.0, 1.0, "a"), (1.0, 0.5, "a")]}
    rep.value("inf", math.inf)
    paths = ex.emit_report(rep, tmp_path)
    rows = list(csv.reader(open(paths["series"])))
    assert rows == [["t", "y"], ["0.0", "2.0"], ["1.0", ""]]
    plot = list(csv.reader(open(tmp_path / "plotdata" / "curve.csv")))
    assert plot[0] == ["x", "y", "series"] and len(plot) == 3
    doc = json.loads(paths["report"].read_text())
    assert doc["values"]["inf"]["value"] == "infinite"


def test_empty_diagnostics_only_echo():
    doc = small_shell_doc()
    doc["diagnostics"] = {"list": []}
    rep = ex.run_experiment(ex.scenario_from_dict(doc))
    assert rep.scenario["kind"] == "outgoing_shell"
    assert not rep.verdicts and not rep.traces
    assert set(rep.values) <= {"profile_variant", "smallness K"}


def test_small_shell_scenario_converges():
    rep = ex.run_experiment(ex.scenario_from_dict(small_shell_doc()))
    assert rep.passed, (rep.verdicts, rep.errors)
    assert rep.traces["picard"]["converged"]


# --- configuration errors -------------------------------------------------------

@pytest.mark.parametrize("doc,msg", [
    ({}, "missing"),
    ({"scenario": {"kind": "spiral"}}, "unknown scenario kind"),
    ({"scenario": {"kind": "outgoing_shell"}, "diagnostics": {"list": ["vibes"]}},
     "unknown diagnostics"),
    ({"scenario": {"kind": "outgoing_shell"}, "solver": {"sign": "sideways"}}, "sign"),
])
def test_config_errors(doc, msg):
    with pytest.raises(ex.ConfigError, match=msg):
        ex.scenario_from_dict(doc)


def test_unknown_method_is_config_error():
    with pytest.raises(ex.ConfigError, match="method"):
        ex.run_experiment(ex.scenario_from_dict(small_shell_doc(method="magic")))


def test_cfl_violation_is_config_error():
    with pytest.raises(ex.ConfigError):
        ex.run_experiment(ex.scenario_from_dict(small_shell_doc(dt=1.0)))


def test_load_scenario_missing_file(tmp_path):
    with pytest.raises(ex.ConfigError, match="cannot read"):
        ex.load_scenario(tmp_path / "nope.toml")


def test_shipped_scenarios_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "scenarios"
    files = sorted(root.glob("*.toml"))
    assert files
    for f in files:
        sc = ex.load_scenario(f)
        assert sc.kind in ex.SCENARIO_KINDS


def test_far_support_scenario_reports_dispersion_ratio():
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "scenarios" / "far_support.toml"
    rep = ex.run_experiment(ex.load_scenario(path))
    assert rep.passed
    assert "||u||_{L^{N/2}_t L^inf_x}" in rep.values
    assert rep.values["dispersion / bound scale"]["value"] > 0
