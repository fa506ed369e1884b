"""Parameter sweeps behind the detuning surface, the resonance curve and
the comparison traces.

Every grid point is an independent task. Parallel runs go through a process
pool whose results are merged in grid order, so the output never depends on
the number of workers. A failing point is recorded with its error class and
the sweep continues.
"""

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import modulation as mod
from .dynamics import MIN_SAMPLES, AdiabaticityWarning, Trajectory, integrate
from .entanglement import min_symplectic_eigenvalue, pair_series
from .errors import OptomechError
from .optimize import TAU_KAPPA, floquet_radius, long_time_orbit

#: adjacent-column jump in max E_MA flagged as a suspect integration failure
DISCONTINUITY = 0.05
#: columns below this peak E_MA are exempt from the delay-ordering check
ORDERING_FLOOR = 1e-3


@dataclass(frozen=True)
class Axis:
    """One linear grid axis; ``min``/``max`` are in the axis' scaled units."""

    name: str
    min: float
    max: float
    points: int

    def __post_init__(self):
        if int(self.points) != self.points or self.points < 2:
            raise OptomechError(f"axis {self.name!r} needs at least 2 points")
        if not (np.isfinite(self.min) and np.isfinite(self.max) and self.max > self.min):
            raise OptomechError(f"axis {self.name!r} needs finite min < max")

    @property
    def values(self):
        return np.linspace(self.min, self.max, int(self.points))


@dataclass(frozen=True)
class ScanGrid:
    axes: tuple

    @property
    def shape(self):
        return tuple(a.points for a in self.axes)

    def points(self):
        """Cartesian product of the axis values, last axis fastest."""
        return list(itertools.product(*(a.values.tolist() for a in self.axes)))


def default_delta_axis(points=64):
    return Axis("delta_over_omega_m", 0.5, 4.0, points)


def default_sigma_axis(points=64):
    return Axis("sigma_over_kappa", 0.2, 2.0, points)


def _ordered_map(fn, items, workers):
    """``map`` that preserves input order whatever the pool size."""
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _failure(exc):
    return type(exc).__name__, str(exc)


# --- detuning-time surface ---------------------------------------------------

@dataclass
class DetuningScan:
    """``E_*`` arrays have shape ``(len(delta_over_omega_m), len(kappa_t))``;
    rows of failed columns are NaN."""

    delta_over_omega_m: np.ndarray
    kappa_t: np.ndarray
    E_CM: np.ndarray
    E_CA: np.ndarray
    E_MA: np.ndarray
    nu_min_phys: np.ndarray
    status: list
    messages: list

    @property
    def max_e_ma(self):
        return np.nanmax(np.where(np.isnan(self.E_MA), -np.inf, self.E_MA), axis=1)

    def best_delta(self):
        """Column maximizing ``max_t E_MA``."""
        return float(self.delta_over_omega_m[int(np.argmax(self.max_e_ma))])

    def suspects(self, threshold=DISCONTINUITY):
        """Indices ``i`` with ``|max E_MA[i+1] - max E_MA[i]| > threshold``."""
        m = self.max_e_ma
        jump = np.abs(np.diff(m))
        return [int(i) for i in np.flatnonzero(~np.isfinite(jump) | (jump > threshold))]

    def delay_ordering(self, floor=ORDERING_FLOOR):
        """Per column ``(delta, kappa_t at max E_CM, kappa_t at max E_MA, holds)``.

        Columns whose peak ``E_MA`` does not exceed ``floor`` are skipped.
        """
        rows = []
        for i, d in enumerate(self.delta_over_omega_m):
            if self.status[i] != "ok" or not self.E_MA[i].max() > floor:
                continue
            t_cm = peak_time(self.kappa_t, self.E_CM[i])
            t_ma = peak_time(self.kappa_t, self.E_MA[i])
            rows.append((float(d), t_cm, t_ma, t_cm < t_ma))
        return rows


def peak_time(t, y):
    """Location of the maximum of sampled ``y(t)``, refined by a parabola
    through the largest sample and its two neighbours (uniform grid)."""
    i = int(np.argmax(y))
    if i == 0 or i == len(y) - 1:
        return float(t[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    curv = y0 - 2 * y1 + y2
    if not curv < 0:
        return float(t[i])
    return float(t[i] + 0.5 * (y0 - y2) / curv * (t[i + 1] - t[i]))


def _detuning_point(args):
    p, delta_ratio, t_end, dt, samples, log_base = args
    try:
        traj = integrate(p.with_delta(delta_ratio * p.omega_m), mod.constant(p.eta0), t_end,
                         dt=dt, min_samples=samples, log_base=log_base)
    except OptomechError as exc:
        return ("error",) + _failure(exc)
    e = traj.entanglement
    return ("ok", traj.times, e["E_CM"], e["E_CA"], e["E_MA"], traj.nu_min_phys)


def detuning_scan(p, axis=None, t_end_kappa=10.0, dt=None, samples=MIN_SAMPLES, workers=1,
                  log_base="e"):
    """Constant-pump entanglement surfaces over detuning and time.

    Parameters
    ----------
    p : SystemParams
        ``p.delta`` is overridden by each grid value.
    axis : Axis, optional
        Detuning grid in units of ``omega_m``; default ``[0.5, 4] x 64``.
    t_end_kappa : float
        Horizon in units of ``1/kappa``.
    dt : float, optional
        Step in seconds.
    """
    axis = axis or default_delta_axis()
    t_end = t_end_kappa / p.kappa
    deltas = axis.values
    out = _ordered_map(_detuning_point,
                       [(p, float(d), t_end, dt, samples, log_base) for d in deltas], workers)

    ref = next((o for o in out if o[0] == "ok"), None)
    if ref is None:
        raise OptomechError("every detuning point failed: " + out[0][2])
    kappa_t = ref[1] * p.kappa
    arrays = {k: np.full((len(deltas), len(kappa_t)), np.nan) for k in ("cm", "ca", "ma", "nu")}
    status, messages = [], []
    for i, o in enumerate(out):
        if o[0] == "ok":
            for key, col in zip(("cm", "ca", "ma", "nu"), o[2:]):
                arrays[key][i] = col
            status.append("ok")
            messages.append("")
        else:
            status.append(o[1])
            messages.append(o[2])
    return DetuningScan(deltas, kappa_t, arrays["cm"], arrays["ca"], arrays["ma"], arrays["nu"],
                        status, messages)


# --- resonance curve -----------------------------------------------------------

@dataclass
class SigmaScan:
    """Long-time per-period maximum of ``E_MA`` against the modulation frequency.

    Points are sorted by ``sigma_over_kappa``; ``refined`` marks the ones
    added around the resonance. Failed points carry NaN values.
    """

    sigma_over_kappa: np.ndarray
    value: np.ndarray
    margin: np.ndarray
    periods: np.ndarray
    floquet_radius: np.ndarray
    refined: np.ndarray
    status: list
    messages: list = field(default_factory=list)

    @property
    def peak_index(self):
        v = np.where(np.isnan(self.value), -np.inf, self.value)
        return int(np.argmax(v))

    @property
    def peak_location(self):
        return float(self.sigma_over_kappa[self.peak_index])

    @property
    def peak_value(self):
        return float(self.value[self.peak_index])

    def positive_runs(self):
        """Index ranges ``(start, stop)`` of consecutive points with ``E_MA > 0``."""
        pos = np.nan_to_num(self.value, nan=0.0) > 0
        runs, start = [], None
        for i, flag in enumerate(pos):
            if flag and start is None:
                start = i
            elif not flag and start is not None:
                runs.append((start, i))
                start = None
        if start is not None:
            runs.append((start, len(pos)))
        return runs

    def single_interior_peak(self):
        """One contiguous entangled window, away from both grid edges."""
        runs = self.positive_runs()
        if len(runs) != 1:
            return False
        start, stop = runs[0]
        return start > 0 and stop < len(self.value) and 0 < self.peak_index < len(self.value) - 1


def _sigma_point(args):
    p, s, dt, orbit_kw, with_floquet = args
    profile = mod.monochromatic(p.eta0, s * p.kappa)
    radius = math.nan
    try:
        if with_floquet:
            radius = floquet_radius(p, profile, dt)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AdiabaticityWarning)
            r = long_time_orbit(p, profile, dt, **orbit_kw)
    except OptomechError as exc:
        return ("error", radius) + _failure(exc)
    return ("ok", radius, r.value, r.margin, r.periods)


def _refine_window(sigmas, margins, points):
    i = int(np.argmax(np.where(np.isfinite(margins), margins, -np.inf)))
    lo = sigmas[max(i - 1, 0)]
    hi = sigmas[min(i + 1, len(sigmas) - 1)]
    return np.linspace(lo, hi, points + 2)[1:-1]


def sigma_resonance_scan(p, axis=None, dt=None, refine_rounds=3, refine_points=16, workers=1,
                         floquet=True, **orbit_kw):
    """Resonance curve of the monochromatic modulation.

    The resonance is far narrower than a uniform grid spacing, so after the
    coarse pass the interval around the largest unclamped margin
    ``-ln(2 nu_min)`` is resampled ``refine_rounds`` times with
    ``refine_points`` new points each. The margin varies smoothly even where
    ``E_MA`` itself is clamped to 0, which is what makes this search work.

    ``orbit_kw`` is passed to :func:`long_time_orbit`.
    """
    axis = axis or default_sigma_axis()
    known = {}

    def run(sigmas, refined):
        new = [float(s) for s in sigmas if float(s) not in known]
        res = _ordered_map(_sigma_point, [(p, s, dt, orbit_kw, floquet) for s in new], workers)
        for s, r in zip(new, res):
            known[s] = (r, refined)

    run(axis.values, False)
    for _ in range(refine_rounds):
        sig = np.array(sorted(known))
        marg = np.array([known[s][0][3] if known[s][0][0] == "ok" else -np.inf for s in sig])
        run(_refine_window(sig, marg, refine_points), True)

    sig = np.array(sorted(known))
    n = len(sig)
    value, margin, periods, radius = (np.full(n, np.nan) for _ in range(4))
    refined = np.zeros(n, dtype=bool)
    status, messages = [], []
    for i, s in enumerate(sig):
        r, ref = known[s]
        refined[i] = ref
        radius[i] = r[1]
        if r[0] == "ok":
            value[i], margin[i], periods[i] = r[2], r[3], r[4]
            status.append("ok")
            messages.append("")
        else:
            status.append(r[2])
            messages.append(r[3])
    return SigmaScan(sig, value, margin, periods, radius, refined, status, messages)


# --- comparison traces ---------------------------------------------------------

@dataclass
class Comparison:
    """Labeled trajectories plus the ratios the figures are discussed with.

    ``ratios`` keys: ``short_time`` (optimal / constant max ``E_MA`` on
    ``[0, tau]``), ``long_over_unmodulated`` (monochromatic long-time max /
    constant-pump max over the short window) and ``long_time`` (optimal
    periodic / monochromatic long-time value).
    """

    traces: dict
    ratios: dict
    period_t: np.ndarray
    period_eta: dict
    orbit_values: dict


def comparison_traces(p, short_profile, long_profile, sigma_bar=None, dt=None,
                      t_end_kappa=10.0, samples=MIN_SAMPLES, log_base="e", orbit_kw=None):
    """Traces for the constant pump, the optimal short-time profile and the
    monochromatic / optimal periodic orbits.

    ``sigma_bar`` (s^-1) defaults to ``long_profile.sigma``. The periodic
    traces are one period of the converged orbit, re-based to start at 0.
    ``orbit_kw`` is passed to :func:`long_time_orbit` (its ``log_base``
    takes precedence over the argument of the same name).
    """
    orbit_kw = dict(orbit_kw or {})
    log_base = orbit_kw.pop("log_base", log_base)
    sigma_bar = long_profile.sigma if sigma_bar is None else sigma_bar
    tau = short_profile.tau if short_profile.variant is mod.Variant.FOURIER else TAU_KAPPA / p.kappa
    const = integrate(p, mod.constant(p.eta0), t_end_kappa / p.kappa, dt=dt, min_samples=samples,
                      log_base=log_base)
    short = integrate(p, short_profile, tau, dt=dt, min_samples=samples, log_base=log_base)
    mono = mod.monochromatic(p.eta0, sigma_bar)

    traces = {"constant": const, "optimal_short": short}
    orbit_values = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdiabaticityWarning)
        for label, prof in (("monochromatic", mono), ("optimal_long", long_profile)):
            r = long_time_orbit(p, prof, dt, log_base=log_base, **orbit_kw)
            t0 = r.times[0]
            etas = mod.evaluate(prof, r.times)
            traces[label] = _orbit_trajectory(r, etas, t0, log_base)
            orbit_values[label] = r.value

    in_window = const.times <= tau * (1 + 1e-12)
    const_short = float(np.max(const.entanglement["E_MA"][in_window]))
    ratios = {
        "short_time": _ratio(float(np.max(short.entanglement["E_MA"])), const_short),
        "long_over_unmodulated": _ratio(orbit_values["monochromatic"],
                                        float(np.max(const.entanglement["E_MA"]))),
        "long_time": _ratio(orbit_values["optimal_long"], orbit_values["monochromatic"]),
    }
    period_t = np.linspace(0.0, 2 * np.pi / sigma_bar, 401)
    period_eta = {"monochromatic": mod.evaluate(mono, period_t),
                  "optimal_long": mod.evaluate(long_profile, period_t)}
    return Comparison(traces, ratios, period_t, period_eta, orbit_values)


def _ratio(a, b):
    return a / b if b else math.inf


def _orbit_trajectory(r, etas, t0, log_base):
    return Trajectory(r.times - t0, r.covs, etas, pair_series(r.covs, log_base),
                      min_symplectic_eigenvalue(r.covs), float(r.times[1] - r.times[0]))
