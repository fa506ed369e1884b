import dataclasses

import numpy as np
import pytest
from scipy.linalg import expm, solve_continuous_lyapunov, solve_discrete_lyapunov

from bec_optomech import _kernel
from bec_optomech import modulation as mod
from bec_optomech.dynamics import (AdiabaticityWarning, floquet_multipliers, initial_covariance,
                                   integrate, lyapunov_steady_state, propagate, pump_table,
                                   stability_check)
from bec_optomech.entanglement import min_symplectic_eigenvalue
from bec_optomech.errors import InstabilityError, OptomechError
from bec_optomech.params import drift_matrix, drift_parts, noise_matrix, steady_state
from helpers import entrywise_rel, exact_constant_drift


def k_of(p):
    return drift_matrix(p, steady_state(p, p.eta0).alpha_s)


def test_initial_covariance():
    np.testing.assert_array_equal(initial_covariance(0.0), 0.5 * np.eye(6))
    np.testing.assert_array_equal(np.diag(initial_covariance(1.0)), [.5, .5, 1.5, 1.5, .5, .5])
    assert min_symplectic_eigenvalue(initial_covariance(3.0)) == pytest.approx(0.5)
    with pytest.raises(OptomechError):
        initial_covariance(-1.0)


def test_lyapunov_two_by_two():
    kappa, delta = 2.0, 3.0
    k = np.array([[-kappa, delta], [-delta, -kappa]])
    np.testing.assert_allclose(lyapunov_steady_state(k, np.diag([kappa, kappa])),
                               0.5 * np.eye(2), rtol=1e-14)


def test_lyapunov_matches_scipy(p):
    rng = np.random.default_rng(0)
    for _ in range(20):
        k = rng.normal(size=(6, 6)) - 4 * np.eye(6)
        if not stability_check(k):
            continue
        d = np.diag(rng.uniform(0, 1, 6))
        np.testing.assert_allclose(lyapunov_steady_state(k, d), solve_continuous_lyapunov(k, -d),
                                   rtol=1e-10, atol=1e-12)
    k, d = k_of(p), noise_matrix(p)
    ref = solve_continuous_lyapunov(k, -d)
    v = lyapunov_steady_state(k, d)
    # stiff K (rates from 1e-6 to 1 kappa): compare normwise and via the residual
    assert np.max(np.abs(v - ref)) <= 1e-10 * np.max(np.abs(ref))
    assert np.linalg.norm(k @ v + v @ k.T + d) <= 1e-14 * np.linalg.norm(d)


def test_lyapunov_rejects_unstable(p780):
    with pytest.raises(InstabilityError):
        lyapunov_steady_state(k_of(p780), noise_matrix(p780))


def test_fixed_point_is_stationary(p_fast):
    v_ss = lyapunov_steady_state(k_of(p_fast), noise_matrix(p_fast))
    tr = integrate(p_fast, mod.constant(p_fast.eta0), 5 / p_fast.kappa, v0=v_ss)
    np.testing.assert_allclose(tr.cov, np.broadcast_to(v_ss, tr.cov.shape), rtol=1e-9, atol=1e-12)


def test_matches_matrix_exponential(p):
    # constant drift has the closed form e^{Kt}(V0 - Vss)e^{K^T t} + Vss
    t = 5 / p.kappa
    tr = integrate(p, mod.constant(p.eta0), t)
    ref = exact_constant_drift(k_of(p), noise_matrix(p), initial_covariance(p.nbar), t)
    np.testing.assert_allclose(tr.final, ref, rtol=1e-8)


def test_fourth_order_convergence(p):
    t = 2 / p.kappa
    ref = exact_constant_drift(k_of(p), noise_matrix(p), initial_covariance(p.nbar), t)
    errs = []
    for dt in (0.1, 0.05):
        v = integrate(p, mod.constant(p.eta0), t, dt=dt / p.kappa).final
        errs.append(np.max(np.abs(v - ref)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.15)


def test_free_vacuum_oscillators(p):
    q = dataclasses.replace(p, gamma=0.0, nbar=0.0)
    tr = integrate(q, mod.constant(0.0), 10 / q.kappa)
    np.testing.assert_allclose(tr.cov[:, 4, 4], 0.5, rtol=1e-12)
    np.testing.assert_allclose(tr.cov[:, 5, 5], 0.5, rtol=1e-12)
    np.testing.assert_allclose(tr.cov[:, 2:4, 2:4], np.broadcast_to(0.5 * np.eye(2), (len(tr), 2, 2)),
                               rtol=1e-12)


def test_mode_swap_invariance(p_sym):
    tr = integrate(p_sym, mod.constant(p_sym.eta0), 10 / p_sym.kappa)
    t = np.eye(6)
    t[2:6, 2:6] = 0
    t[2:4, 4:6] = t[4:6, 2:4] = -np.eye(2)
    swapped = t @ tr.cov @ t.T
    assert np.max(np.abs(swapped - tr.cov)) <= 1e-9 * np.max(np.abs(tr.cov))


def test_trajectory_shape_and_physicality(p):
    tr = integrate(p, mod.constant(p.eta0), 3.4 / p.kappa)
    assert len(tr) >= 2000
    assert np.all(np.diff(tr.times) > 0)
    assert tr.cov.shape == (len(tr), 6, 6) and tr.eta.shape == (len(tr),)
    assert set(tr.entanglement) == {"E_CM", "E_CA", "E_MA"}
    assert np.min(tr.nu_min_phys) >= 0.5 - 1e-6
    np.testing.assert_array_equal(tr.cov, np.swapaxes(tr.cov, 1, 2))
    for e in tr.entanglement.values():
        assert e[0] == 0.0


def test_exact_end_time(p):
    t_end = 1.2345 / p.kappa
    tr = integrate(p, mod.constant(p.eta0), t_end, dt=1e-3 / p.kappa)
    assert tr.times[-1] == pytest.approx(t_end, rel=1e-12)


def test_instability_detected(p780):
    with pytest.raises(InstabilityError):
        integrate(p780, mod.constant(p780.eta0), 40 / p780.kappa)


def test_rejects_bad_arguments(p):
    with pytest.raises(OptomechError):
        integrate(p, mod.constant(p.eta0), -1.0)
    with pytest.raises(OptomechError):
        integrate(p, mod.constant(p.eta0), 1e-6, dt=0.0)


def test_adiabaticity_warning(p):
    fast = mod.monochromatic(p.eta0, 3 * p.kappa)
    with pytest.warns(AdiabaticityWarning):
        integrate(p, fast, 1 / p.kappa)


def test_propagate_reuses_table(p):
    prof = mod.monochromatic(p.eta0, 0.79 * p.kappa)
    v0 = initial_covariance(p.nbar)
    n = 1000
    dt = prof.period / n
    _, a, _, _ = propagate(p, prof, v0, 0.0, n, dt, n)
    _, b, _, _ = propagate(p, prof, a[-1], prof.period, n, dt, n)
    _, c, _, _ = propagate(p, prof, v0, 0.0, 2 * n, dt, 2 * n)
    np.testing.assert_allclose(b[-1], c[-1], rtol=1e-11)


def test_floquet_of_flat_drive_is_matrix_exponential(p):
    flat = mod.harmonic(p.eta0, 0.79 * p.kappa, a=(), b=())
    k = drift_matrix(p, steady_state(p, 5 * p.eta0 / 8).alpha_s)
    mu = floquet_multipliers(p, flat)
    ref = np.linalg.eigvals(expm(k * flat.period))
    np.testing.assert_allclose(np.sort(np.abs(mu)), np.sort(np.abs(ref)), rtol=1e-9)


def test_floquet_affine_map_oracle(p_fast):
    # one period acts as V -> Phi V Phi^T + W, so after N periods
    # V_N = Phi^N (V_0 - V*) Phi^N^T + V* with V* = Phi V* Phi^T + W
    prof = mod.monochromatic(p_fast.eta0, p_fast.kappa)
    assert np.abs(floquet_multipliers(p_fast, prof)[0]) < 1
    n = 6000
    dt = prof.period / n
    gtab = pump_table(p_fast, prof, 0.0, n, dt)
    base, coupling = drift_parts(p_fast)
    phi = _kernel.rk4_fundamental(dt, n, *_kernel.sparse(base), *_kernel.sparse(coupling), gtab)
    _, w, _, _ = propagate(p_fast, prof, np.zeros((6, 6)), 0.0, n, dt, n, check=False)
    v_star = solve_discrete_lyapunov(phi, w[-1])
    v0 = initial_covariance(p_fast.nbar)
    v = v0
    periods = 30
    for k in range(periods):
        _, covs, _, _ = propagate(p_fast, prof, v, k * prof.period, n, dt, n, gtab=gtab)
        v = covs[-1]
    phin = np.linalg.matrix_power(phi, periods)
    expected = phin @ (v0 - v_star) @ phin.T + v_star
    assert entrywise_rel(v, expected) < 1e-8


def test_converges_to_lyapunov_without_dark_mode(p_fast):
    k, d = k_of(p_fast), noise_matrix(p_fast)
    v_ss = lyapunov_steady_state(k, d)
    tr = integrate(p_fast, mod.constant(p_fast.eta0), 3000 / p_fast.kappa)
    # entries below 1e-6 of the largest are round-off dominated (~1e-14 absolute)
    assert entrywise_rel(tr.final, v_ss, floor=1e-6) < 1e-6


def test_long_run_against_closed_form(p):
    # 50/kappa: integrator agrees with the exact transient, not yet with the fixed point
    t = 50 / p.kappa
    tr = integrate(p, mod.constant(p.eta0), t)
    k, d = k_of(p), noise_matrix(p)
    ref = exact_constant_drift(k, d, initial_covariance(p.nbar), t)
    np.testing.assert_allclose(tr.final, ref, rtol=1e-6)
    slow = np.max(np.linalg.eigvals(k).real) / p.kappa
    assert -1e-4 < slow < 0
