"""Covariance-matrix dynamics ``dV/dt = K(t) V + V K(t)^T + D``.

The drift follows the pump adiabatically: at each instant the intracavity
amplitude is the steady-state value for ``eta(t)``. Integration is fixed-step
classical RK4 (compiled, see ``_kernel``); the algebraic fixed point is
available independently through :func:`lyapunov_steady_state`.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .entanglement import min_symplectic_eigenvalue, pair_series
from .errors import InstabilityError, OptomechError, PhysicalityError
from .modulation import Variant, adiabatic_rate, evaluate
from .params import drift_parts, noise_matrix

#: default step, in units of 1/kappa
DT_KAPPA = 1e-3
#: minimum number of stored samples per run
MIN_SAMPLES = 2000
#: growth of trace(V) over trace(V(0)) treated as divergence
TRACE_CAP = 1e6
PHYS_TOL = 1e-6
MAX_HALVINGS = 4
ADIABATIC_LIMIT = 0.1


class AdiabaticityWarning(UserWarning):
    """Pump changes faster than 10% per cavity lifetime."""


@dataclass(frozen=True)
class Trajectory:
    """Sampled covariance evolution.

    ``entanglement`` maps ``"E_CM"``, ``"E_CA"``, ``"E_MA"`` to arrays aligned
    with ``times``.
    """

    times: np.ndarray
    cov: np.ndarray
    eta: np.ndarray
    entanglement: dict = field(default_factory=dict)
    nu_min_phys: np.ndarray | None = None
    dt: float = 0.0

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.cov[-1]


def initial_covariance(nbar):
    """Vacuum cavity and atoms, thermal mirror with occupation ``nbar``."""
    if nbar < 0:
        raise OptomechError("nbar must be non-negative")
    th = 2 * nbar + 1
    return 0.5 * np.diag([1.0, 1.0, th, th, 1.0, 1.0])


def stability_check(k):
    """True iff every eigenvalue of ``k`` has strictly negative real part."""
    return bool(np.max(np.linalg.eigvals(k).real) < 0)


def _triu_pairs(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def lyapunov_steady_state(k, d):
    """Solve ``K V + V K^T + D = 0`` for symmetric ``V``.

    Direct dense solve on the ``n (n+1) / 2`` independent entries.
    """
    k = np.asarray(k, dtype=float)
    d = np.asarray(d, dtype=float)
    if not stability_check(k):
        raise InstabilityError("drift matrix is not Hurwitz-stable; no steady state")
    n = k.shape[0]
    pairs = _triu_pairs(n)
    rows = np.array([i for i, _ in pairs])
    cols = np.array([j for _, j in pairs])
    a = np.empty((len(pairs), len(pairs)))
    for col, (i, j) in enumerate(pairs):
        e = np.zeros((n, n))
        e[i, j] = e[j, i] = 1.0
        lin = k @ e + e @ k.T
        a[:, col] = lin[rows, cols]
    x = np.linalg.solve(a, -d[rows, cols])
    v = np.zeros((n, n))
    v[rows, cols] = x
    v[cols, rows] = x
    return v


def pump_table(p, profile, t0, nsteps, dt):
    """Intracavity amplitude on the half-step grid used by the kernel."""
    t = t0 + 0.5 * dt * np.arange(2 * nsteps + 1)
    return np.ascontiguousarray(evaluate(profile, t) / p.detuning_norm, dtype=float)


def propagate(p, profile, v0, t0, nsteps, dt, stride, gtab=None, check=True):
    """Raw RK4 segment from ``v0`` at ``t0``, without step retries.

    ``gtab`` may carry a precomputed :func:`pump_table` (periodic drives reuse
    one period's table). Returns ``(times, covs, etas, nu_min)``.
    """
    if gtab is None:
        gtab = pump_table(p, profile, t0, nsteps, dt)
    base, coupling = drift_parts(p)
    cap = TRACE_CAP * np.trace(initial_covariance(p.nbar))
    covs, steps, status, n_done = _kernel.rk4_lyapunov(
        np.ascontiguousarray(v0, dtype=float), float(dt), int(nsteps), int(stride),
        *_kernel.sparse(base), *_kernel.sparse(coupling), noise_matrix(p), gtab, float(cap))
    if status == _kernel.DIVERGED:
        raise InstabilityError(
            f"covariance diverged at t*kappa={(t0 + n_done * dt) * p.kappa:.4g}"
            " (the drive makes the system unstable)")
    times = t0 + steps * dt
    etas = gtab[2 * steps] * p.detuning_norm
    nu = min_symplectic_eigenvalue(covs)
    if check and np.min(nu) < 0.5 - PHYS_TOL:
        bad = int(np.argmin(nu))
        raise PhysicalityError(
            f"symplectic eigenvalue {nu[bad]:.9f} < 1/2 at t*kappa={times[bad] * p.kappa:.4g}")
    return times, covs, etas, nu


def floquet_multipliers(p, profile, dt=None):
    """Eigenvalues of the one-period monodromy matrix of the mean-value drift.

    The covariance orbit of a periodic drive converges iff every multiplier
    lies strictly inside the unit circle. Sorted by decreasing modulus.
    """
    if profile.variant not in (Variant.MONOCHROMATIC, Variant.HARMONIC):
        raise OptomechError("Floquet multipliers need a periodic profile")
    period = profile.period
    dt = DT_KAPPA / p.kappa if dt is None else float(dt)
    nsteps = max(1, math.ceil(period / dt - 1e-9))
    step = period / nsteps
    gtab = pump_table(p, profile, 0.0, nsteps, step)
    base, coupling = drift_parts(p)
    phi = _kernel.rk4_fundamental(step, nsteps, *_kernel.sparse(base),
                                  *_kernel.sparse(coupling), gtab)
    mu = np.linalg.eigvals(phi)
    return mu[np.argsort(-np.abs(mu), kind="stable")]


def check_adiabatic(p, profile):
    rate = adiabatic_rate(profile, p.kappa)
    if rate > ADIABATIC_LIMIT:
        warnings.warn(
            f"pump changes by up to {rate:.2f} of its value per 1/kappa"
            f" (> {ADIABATIC_LIMIT}); adiabatic following is questionable",
            AdiabaticityWarning, stacklevel=3)
    return rate


def integrate(p, profile, t_end, dt=None, min_samples=MIN_SAMPLES, v0=None,
              entanglement=True, log_base="e"):
    """Integrate the covariance from ``v0`` (default: thermal initial state).

    Parameters
    ----------
    p : SystemParams
    profile : PumpProfile
    t_end : float
        Final time in seconds.
    dt : float, optional
        Step in seconds, default ``1e-3 / kappa``. It is shrunk so that
        ``t_end`` is an exact number of steps.
    min_samples : int
        Lower bound on the number of stored samples.

    Raises
    ------
    InstabilityError
        ``trace(V)`` grew beyond ``1e6 trace(V(0))``.
    PhysicalityError
        A sample violated ``nu >= 1/2`` even after four step halvings.
    """
    if not t_end > 0:
        raise OptomechError("t_end must be positive")
    dt = DT_KAPPA / p.kappa if dt is None else float(dt)
    if not dt > 0:
        raise OptomechError("dt must be positive")
    if v0 is None:
        v0 = initial_covariance(p.nbar)
    check_adiabatic(p, profile)

    for attempt in range(MAX_HALVINGS + 1):
        nsteps = max(1, math.ceil(t_end / dt - 1e-9))
        step = t_end / nsteps
        stride = max(1, nsteps // min_samples)
        try:
            times, covs, etas, nu = propagate(p, profile, v0, 0.0, nsteps, step, stride)
            break
        except PhysicalityError:
            if attempt == MAX_HALVINGS:
                raise
            dt = dt / 2

    ent = pair_series(covs, log_base) if entanglement else {}
    return Trajectory(times, covs, etas, ent, nu, step)
