import numpy as np
import pytest

from bec_optomech import modulation as mod
from bec_optomech.dynamics import integrate
from bec_optomech.errors import OptomechError
from bec_optomech.optimize import long_time_orbit
from bec_optomech.scans import (Axis, DetuningScan, ScanGrid, SigmaScan, _ordered_map,
                                comparison_traces,
                                default_delta_axis, default_sigma_axis, detuning_scan,
                                peak_time, sigma_resonance_scan)


def square(x):
    return x * x


def test_axis_values_and_validation():
    ax = Axis("x", 0.5, 4.0, 8)
    np.testing.assert_allclose(ax.values, np.linspace(0.5, 4.0, 8))
    for bad in [dict(points=1), dict(points=2.5), dict(min=4.0), dict(max=np.inf)]:
        kw = dict(name="x", min=0.5, max=4.0, points=8) | bad
        with pytest.raises(OptomechError):
            Axis(**kw)


def test_default_axes():
    assert (default_delta_axis().min, default_delta_axis().max, default_delta_axis().points) == \
        (0.5, 4.0, 64)
    assert (default_sigma_axis().min, default_sigma_axis().max) == (0.2, 2.0)


def test_grid_order():
    g = ScanGrid((Axis("a", 0, 1, 2), Axis("b", 0, 2, 3)))
    assert g.shape == (2, 3)
    assert g.points() == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


def test_ordered_map_independent_of_workers():
    items = list(range(17))
    assert _ordered_map(square, items, 1) == _ordered_map(square, items, 3) == \
        [i * i for i in items]


def test_peak_time_parabola():
    t = np.linspace(0, 1, 11)
    y = -(t - 0.537) ** 2
    assert peak_time(t, y) == pytest.approx(0.537, abs=1e-12)
    assert peak_time(t, t) == 1.0


def test_detuning_scan_matches_direct_runs(p):
    ax = Axis("delta_over_omega_m", 1.0, 3.0, 3)
    scan = detuning_scan(p, ax, t_end_kappa=2.0, samples=200)
    assert scan.E_MA.shape == (3, len(scan.kappa_t))
    assert scan.status == ["ok"] * 3
    traj = integrate(p.with_delta(2.0 * p.omega_m), mod.constant(p.eta0), 2.0 / p.kappa,
                     min_samples=200)
    np.testing.assert_array_equal(scan.E_MA[1], traj.entanglement["E_MA"])
    np.testing.assert_allclose(scan.kappa_t, traj.times * p.kappa, rtol=1e-12)
    assert scan.best_delta() in ax.values


def test_detuning_scan_workers_agree(p):
    ax = Axis("delta_over_omega_m", 1.0, 3.0, 3)
    a = detuning_scan(p, ax, t_end_kappa=1.0, samples=100, workers=1)
    b = detuning_scan(p, ax, t_end_kappa=1.0, samples=100, workers=2)
    np.testing.assert_array_equal(a.E_MA, b.E_MA)
    np.testing.assert_array_equal(a.E_CM, b.E_CM)


def test_detuning_scan_all_failed_is_an_error(p780):
    with pytest.raises(OptomechError, match="every detuning point failed"):
        detuning_scan(p780, Axis("delta_over_omega_m", 1.0, 2.0, 2), t_end_kappa=40.0,
                      samples=100)


def scan_stub(values):
    n = len(values)
    t = np.linspace(0, 1, 5)
    e = np.outer(values, [0, 0.5, 1, 0.5, 0])
    # E_CM peaks one sample before E_MA
    return DetuningScan(np.arange(n, dtype=float), t, np.roll(e, -1, axis=1), 0 * e, e,
                        np.full_like(e, 0.5), ["ok"] * n, [""] * n)


def test_suspects_and_ordering():
    scan = scan_stub(np.array([0.1, 0.12, 0.3, 0.31]))
    assert scan.suspects() == [1]
    assert scan.best_delta() == 3.0
    rows = scan.delay_ordering()
    assert len(rows) == 4 and all(r[3] for r in rows)


def sigma_stub(values):
    n = len(values)
    values = np.asarray(values, dtype=float)
    return SigmaScan(np.linspace(0, 1, n), values, values, np.zeros(n), np.zeros(n),
                     np.zeros(n, dtype=bool), ["ok"] * n)


def test_single_interior_peak_logic():
    assert sigma_stub([0, 0.1, 0.3, 0.1, 0]).single_interior_peak()
    assert not sigma_stub([0.2, 0.1, 0, 0, 0]).single_interior_peak()
    assert not sigma_stub([0, 0.1, 0, 0.1, 0]).single_interior_peak()
    assert not sigma_stub([0, 0, 0, 0, 0]).single_interior_peak()
    assert sigma_stub([0, 0.1, 0, 0.1, 0]).positive_runs() == [(1, 2), (3, 4)]


def test_sigma_scan_refines_around_resonance(p):
    ax = Axis("sigma_over_kappa", 0.7, 0.9, 3)
    scan = sigma_resonance_scan(p, ax, refine_rounds=2, refine_points=4)
    assert len(scan.sigma_over_kappa) == 3 + 2 * 4
    assert np.all(np.diff(scan.sigma_over_kappa) > 0)
    assert scan.refined.sum() == 8
    assert 0.7 < scan.peak_location < 0.9
    # every point equals a direct long-time orbit
    i = scan.peak_index
    direct = long_time_orbit(p, mod.monochromatic(p.eta0, scan.sigma_over_kappa[i] * p.kappa))
    assert scan.value[i] == direct.value
    assert scan.margin[i] == direct.margin


def test_comparison_traces_ratios(p):
    mono = mod.monochromatic(p.eta0, 0.79 * p.kappa)
    tau = 3.4 / p.kappa
    zeros = [0.0, 0.0]
    flat = mod.fourier(p.eta0, tau, zeros, zeros, zeros)
    comp = comparison_traces(p, flat, mono, t_end_kappa=4.0, samples=200)
    assert set(comp.traces) == {"constant", "optimal_short", "monochromatic", "optimal_long"}
    # a zero-coefficient fourier profile is the constant pump
    # equal up to the different sampling of the two traces
    assert comp.ratios["short_time"] == pytest.approx(1.0, rel=1e-4)
    assert comp.ratios["long_time"] == 1.0
    orbit = comp.traces["monochromatic"]
    assert orbit.times[0] == 0.0
    assert orbit.times[-1] == pytest.approx(mono.period, rel=1e-9)
    assert np.max(orbit.entanglement["E_MA"]) == comp.orbit_values["monochromatic"]
    np.testing.assert_allclose(comp.period_eta["monochromatic"],
                               mod.evaluate(mono, comp.period_t), rtol=1e-14)
