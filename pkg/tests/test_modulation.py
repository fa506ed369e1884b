import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from bec_optomech import modulation as mod
from bec_optomech.errors import ConfigError, FeasibilityError

ETA0 = 4.3e12
KAPPA = 4.7e7
TAU = 3.4 / KAPPA
SIGMA = 0.79 * KAPPA


def quad_mean_square(profile):
    tau = profile.tau
    # many oscillations per window: split the interval for quad
    edges = np.linspace(0.0, tau, 9)
    total = sum(quad(lambda t: float(mod.evaluate(profile, t)) ** 2, a, b, epsabs=0,
                     epsrel=1e-13, limit=200)[0] for a, b in zip(edges[:-1], edges[1:]))
    return total / tau


def random_fourier(seed, j_max=6, amp=0.2):
    rng = np.random.default_rng(seed)
    shifts = mod.draw_shifts(rng, j_max, TAU)
    a = rng.normal(scale=amp, size=j_max)
    b = rng.normal(scale=amp, size=j_max)
    return mod.fourier(ETA0, TAU, a, b, shifts, seed)


def test_constant_profile():
    prof = mod.constant(ETA0)
    np.testing.assert_array_equal(mod.evaluate(prof, np.linspace(0, 1e-6, 7)), ETA0)
    assert mod.feasibility(prof)


def test_monochromatic_values():
    prof = mod.monochromatic(ETA0, SIGMA)
    assert mod.evaluate(prof, math.pi / 2 / SIGMA) == pytest.approx(ETA0 / 8, rel=1e-12)
    assert mod.evaluate(prof, 3 * math.pi / 2 / SIGMA) == pytest.approx(9 * ETA0 / 8, rel=1e-12)
    assert mod.evaluate(prof, 0.0) == pytest.approx(5 * ETA0 / 8, rel=1e-12)
    assert mod.feasibility(prof)


def test_monochromatic_equals_unit_harmonic():
    t = np.linspace(0, 2 * math.pi / SIGMA, 1001)
    mono = mod.evaluate(mod.monochromatic(ETA0, SIGMA), t)
    harm = mod.evaluate(mod.harmonic(ETA0, SIGMA, a=(1.0,)), t)
    np.testing.assert_allclose(harm, mono, rtol=1e-12)


def test_harmonic_zero_coefficients_is_flat():
    prof = mod.harmonic(ETA0, SIGMA, a=(), b=())
    t = np.linspace(0, 2 * math.pi / SIGMA, 101)
    np.testing.assert_allclose(mod.evaluate(prof, t), 5 * ETA0 / 8, rtol=1e-14)


def test_harmonic_sign_convention():
    # eta = eta0/8 + eta0/2 * (1 - A sin - B cos)
    prof = mod.harmonic(ETA0, SIGMA, a=(0.0, 0.3), b=(0.4,))
    t = 0.37 / SIGMA
    x = SIGMA * t
    expected = ETA0 / 8 + ETA0 / 2 * (1 - 0.3 * math.sin(2 * x) - 0.4 * math.cos(x))
    assert mod.evaluate(prof, t) == pytest.approx(expected, rel=1e-12)


def test_harmonic_feasibility_ball():
    assert mod.feasibility(mod.harmonic(ETA0, SIGMA, a=(1.0,)))
    assert not mod.feasibility(mod.harmonic(ETA0, SIGMA, a=(1.0,), b=(1.0,)))
    with pytest.raises(FeasibilityError):
        mod.harmonic(ETA0, SIGMA, a=[0.1] * 9)


def test_project_to_ball():
    x = np.array([3.0, 4.0])
    np.testing.assert_allclose(mod.project_to_ball(x), [0.6, 0.8])
    np.testing.assert_array_equal(mod.project_to_ball(np.array([0.1, 0.2])), [0.1, 0.2])


def test_zero_fourier_unchanged():
    prof = mod.fourier(ETA0, TAU, [0.0] * 3, [0.0] * 3, [0.0] * 3)
    assert mod.normalize_energy(prof) == prof


def test_pure_harmonic_term_forces_zero_scale():
    # exact harmonics: cos^2 only adds energy, so no nonzero scale works
    prof = mod.fourier(ETA0, TAU, [0.3], [0.0], [0.0])
    assert quad_mean_square(prof) == pytest.approx(ETA0 ** 2 * (1 + 0.3 ** 2 / 2), rel=1e-10)
    assert not mod.normalize_energy(prof).coeffs.any()


def test_positive_mean_modulation_has_no_root():
    # a small positive shift makes the sine term's mean positive
    prof = mod.fourier(ETA0, TAU, [0.0], [0.3], [0.01 * 2 * math.pi / TAU])
    with pytest.raises(FeasibilityError):
        mod.normalize_energy(prof)


@pytest.mark.parametrize("seed", [4, 5, 6, 11, 12])
def test_normalized_energy_matches_quadrature(seed):
    # seeds whose draw has a negative mean, hence a positive root
    norm = mod.normalize_energy(random_fourier(seed))
    assert quad_mean_square(norm) == pytest.approx(ETA0 ** 2, rel=1e-9)
    assert mod.mean_square(norm) == pytest.approx(ETA0 ** 2, rel=1e-12)
    again = mod.normalize_energy(norm)
    np.testing.assert_allclose(again.coeffs, norm.coeffs, rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_mean_square_closed_form(seed):
    prof = random_fourier(seed, j_max=3)
    assert mod.mean_square(prof) == pytest.approx(quad_mean_square(prof), rel=1e-9)


def test_fourier_feasibility_needs_energy_and_positivity():
    prof = random_fourier(11)
    assert not mod.feasibility(prof)  # not normalized
    norm = mod.normalize_energy(prof)
    assert mod.feasibility(norm)
    big = mod.fourier(ETA0, TAU, [3.0], [0.0], [0.1 / TAU])
    assert not mod.is_positive(big)


def test_shifts_within_five_percent():
    rng = np.random.default_rng(0)
    shifts = np.array(mod.draw_shifts(rng, 1000, TAU))
    assert np.max(np.abs(shifts)) <= 0.05 * 2 * math.pi / TAU
    assert np.min(shifts) < 0 < np.max(shifts)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=8, max_size=8),
       st.lists(st.floats(-0.5, 0.5), min_size=8, max_size=8))
def test_triangle_lower_bound(a, b):
    prof = mod.harmonic(ETA0, SIGMA, a, b)
    radii = np.hypot(a, b)
    bound = ETA0 / 8 + ETA0 / 2 * (1 - radii.sum())
    assert mod.pump_minimum(prof) >= bound - 1e-6 * ETA0
    assert mod.positivity_bound(prof) == pytest.approx(bound, rel=1e-12, abs=1e-3)


def test_adiabatic_rate_monochromatic():
    # |d eta/dt| / (kappa eta) peaks where eta is small
    rate = mod.adiabatic_rate(mod.monochromatic(ETA0, SIGMA), KAPPA)
    t = np.linspace(0, 2 * math.pi / SIGMA, 200001)
    eta = ETA0 / 8 + ETA0 / 2 * (1 - np.sin(SIGMA * t))
    deta = -ETA0 / 2 * SIGMA * np.cos(SIGMA * t)
    assert rate == pytest.approx(np.max(np.abs(deta) / (KAPPA * eta)), rel=1e-3)


@pytest.mark.parametrize("profile", [
    mod.constant(ETA0),
    mod.monochromatic(ETA0, SIGMA),
    mod.harmonic(ETA0, SIGMA, a=(0.1, -0.2), b=(1 / 3,)),
    random_fourier(5),
])
def test_serialization_round_trip(profile):
    text = mod.dumps(profile)
    assert mod.loads(text) == profile
    assert mod.dumps(mod.loads(text)) == text
    assert mod.from_dict(mod.to_dict(profile)) == profile


def test_loads_rejects_unknown_keys():
    text = mod.dumps(mod.constant(ETA0)) + "colour = red\n"
    with pytest.raises(ConfigError):
        mod.loads(text)
