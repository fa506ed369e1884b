"""Pump-shape optimization of the atom-mirror entanglement.

Two objectives are provided: the short-time value ``E_MA(tau)`` for
energy-normalized fourier profiles, and the long-time maximum of ``E_MA``
over one period of the periodic orbit for periodic profiles. Both return
``-inf`` for candidates that are infeasible or drive the system unstable.

The local search is scipy's Nelder-Mead; constraints are handled by
projecting every candidate before it is evaluated.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from . import modulation as mod
from .dynamics import (DT_KAPPA, floquet_multipliers, initial_covariance, propagate,
                       pump_table)
from .entanglement import log_negativity, negativity_margin
from .errors import (ConvergenceError, FeasibilityError, InstabilityError,
                     OptomechError)
from .modulation import Variant

SENTINEL = -math.inf
#: short-time horizon in units of 1/kappa
TAU_KAPPA = 3.4


@dataclass(frozen=True)
class LongTimeResult:
    value: float
    periods: int
    converged: bool
    per_period: tuple
    margin: float = -math.inf
    times: np.ndarray = field(repr=False, default=None)
    covs: np.ndarray = field(repr=False, default=None)
    e_ma: np.ndarray = field(repr=False, default=None)


def short_time_entanglement(p, profile, dt=None, log_base="e"):
    """``E_MA`` at the end of the fourier horizon, without feasibility gating."""
    tau = profile.tau if profile.variant is Variant.FOURIER else TAU_KAPPA / p.kappa
    dt = DT_KAPPA / p.kappa if dt is None else dt
    nsteps = max(1, math.ceil(tau / dt - 1e-9))
    _, covs, _, _ = propagate(p, profile, initial_covariance(p.nbar), 0.0, nsteps,
                              tau / nsteps, nsteps)
    return log_negativity(covs[-1], "M", "A", log_base)


def objective_short(p, profile, dt=None, log_base="e"):
    """``E_MA(tau)``; ``-inf`` for infeasible or unstable profiles."""
    if not mod.feasibility(profile):
        return SENTINEL
    try:
        return short_time_entanglement(p, profile, dt, log_base)
    except InstabilityError:
        return SENTINEL


def long_time_orbit(p, profile, dt=None, rtol=1e-4, max_periods=200, min_periods=10,
                    samples=200, log_base="e"):
    """Integrate period by period until the per-period maximum of ``E_MA`` settles.

    Convergence means a relative period-to-period change below ``rtol``
    (two exact zeros count as converged) after at least ``min_periods``.
    ``margin`` of the result is the unclamped ``-ln(2 nu_min)`` maximum over
    the final period; it stays informative where ``E_MA`` is clamped to 0.

    Raises
    ------
    ConvergenceError
        No convergence within ``max_periods``.
    InstabilityError
        The orbit diverged.
    """
    period = profile.period
    dt = DT_KAPPA / p.kappa if dt is None else dt
    nsteps = max(samples, math.ceil(period / dt - 1e-9))
    step = period / nsteps
    stride = max(1, nsteps // samples)
    gtab = pump_table(p, profile, 0.0, nsteps, step)

    v = initial_covariance(p.nbar)
    maxima = []
    for k in range(max_periods):
        times, covs, _, _ = propagate(p, profile, v, k * period, nsteps, step, stride, gtab=gtab)
        v = covs[-1]
        raw = negativity_margin(covs, "M", "A")
        e = np.maximum(0.0, raw)
        if str(log_base) == "2":
            e = e / math.log(2.0)
        maxima.append(float(np.max(e)))
        if k + 1 >= min_periods:
            prev, cur = maxima[-2], maxima[-1]
            if abs(cur - prev) <= rtol * max(abs(cur), abs(prev)):
                return LongTimeResult(cur, k + 1, True, tuple(maxima), float(np.max(raw)),
                                      times, covs, e)
    raise ConvergenceError(
        f"per-period max E_MA did not settle within {max_periods} periods"
        f" (last change {abs(maxima[-1] - maxima[-2]):.3g})")


def floquet_radius(p, profile, dt=None):
    """Largest Floquet multiplier modulus of a periodic drive."""
    return float(np.abs(floquet_multipliers(p, profile, dt)[0]))


def objective_long(p, profile, dt=None, log_base="e", floquet_gate=False, **orbit_kw):
    """Long-time maximum of ``E_MA`` over one period; ``-inf`` when infeasible/unstable.

    Instability is detected by divergence of the integrated covariance. With
    ``floquet_gate`` the drive is additionally rejected when any Floquet
    multiplier has modulus >= 1, which also excludes orbits that grow too
    slowly to diverge within the period cap.
    """
    if not mod.feasibility(profile):
        return SENTINEL
    if floquet_gate and floquet_radius(p, profile, dt) >= 1.0:
        return SENTINEL
    try:
        return long_time_orbit(p, profile, dt, log_base=log_base, **orbit_kw).value
    except InstabilityError:
        return SENTINEL


@dataclass(frozen=True)
class ShortObjective:
    """Picklable ``profile -> E_MA(tau)``."""

    p: object
    dt: float | None = None
    log_base: str = "e"

    def __call__(self, profile):
        return objective_short(self.p, profile, self.dt, self.log_base)


@dataclass(frozen=True)
class LongObjective:
    """Picklable long-time objective; non-converged orbits score ``-inf``."""

    p: object
    dt: float | None = None
    log_base: str = "e"
    rtol: float = 1e-4
    max_periods: int = 200
    min_periods: int = 10
    floquet_gate: bool = False

    def __call__(self, profile):
        try:
            return objective_long(self.p, profile, self.dt, self.log_base,
                                  floquet_gate=self.floquet_gate, rtol=self.rtol,
                                  max_periods=self.max_periods, min_periods=self.min_periods)
        except ConvergenceError:
            return SENTINEL


# --- multistart local search ----------------------------------------------

@dataclass
class StartResult:
    start: int
    entropy: tuple
    shifts: tuple
    profile: mod.PumpProfile
    objective: float
    evaluations: int
    incumbent: list

    @property
    def feasible(self):
        return self.objective > SENTINEL


@dataclass
class OptimizationResult:
    best_profile: mod.PumpProfile
    objective: float
    starts: int
    seeds: dict
    history: list
    feasible: bool
    per_start: list = field(default_factory=list)

    def jsonl_lines(self):
        """One JSON object per start, then the incumbent; key order is fixed."""
        lines = []
        for r in self.per_start:
            lines.append(json.dumps({
                "start": r.start,
                "seed": self.seeds["root"],
                "entropy": list(r.entropy),
                "shifts": list(r.shifts),
                "coeffs_a": list(r.profile.coeffs_a),
                "coeffs_b": list(r.profile.coeffs_b),
                "objective": r.objective if r.feasible else None,
                "feasible": r.feasible,
                "evaluations": r.evaluations,
            }))
        lines.append(json.dumps({
            "incumbent": True,
            "start": self.seeds["best_start"],
            "seed": self.seeds["root"],
            "objective": self.objective,
            "feasible": self.feasible,
            "profile": mod.to_dict(self.best_profile),
        }))
        return lines

    def write_jsonl(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            fh.write("\n".join(self.jsonl_lines()) + "\n")


def project(profile, coeffs):
    """Map raw search coordinates onto the feasible set of ``profile``'s variant.

    Harmonic coefficients are scaled radially into the unit ball; fourier
    coefficients are energy-normalized. Returns ``None`` when no feasible
    image exists.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if profile.variant is Variant.HARMONIC:
        cand = profile.with_coeffs(mod.project_to_ball(coeffs))
    elif profile.variant is Variant.FOURIER:
        try:
            cand = mod.normalize_energy(profile.with_coeffs(coeffs))
        except FeasibilityError:
            return None
    else:
        cand = profile.with_coeffs(coeffs)
    return cand if mod.feasibility(cand) else None


def _start_point(initial, start, rng, perturbation, j_max):
    if initial.variant is Variant.FOURIER:
        shifts = mod.draw_shifts(rng, j_max, initial.tau)
        return mod.PumpProfile(initial.variant, initial.eta0, initial.coeffs_a,
                               initial.coeffs_b, shifts, initial.tau, initial.sigma,
                               initial.seed), initial.coeffs
    x0 = initial.coeffs
    if start > 0:
        x0 = x0 + perturbation * rng.standard_normal(x0.size)
    return initial, x0


def _local_search(objective, initial, start, entropy, max_evals, xatol, step,
                  perturbation):
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    base, x0 = _start_point(initial, start, rng, perturbation, len(initial.coeffs_a))
    state = {"best": SENTINEL, "profile": None, "evals": 0, "incumbent": []}

    def neg(x):
        cand = project(base, x)
        value = SENTINEL if cand is None else objective(cand)
        if cand is not None:
            state["evals"] += 1
        if value > state["best"]:
            state["best"], state["profile"] = value, cand
        state["incumbent"].append(state["best"])
        return -value

    simplex = np.vstack([x0, x0 + step * np.eye(x0.size)])
    minimize(neg, x0, method="Nelder-Mead",
             options={"maxfev": max_evals, "xatol": xatol, "fatol": np.inf,
                      "initial_simplex": simplex, "adaptive": True})
    profile = state["profile"] if state["profile"] is not None else base.with_coeffs(x0)
    return StartResult(start, tuple(entropy), base.shifts, profile, state["best"],
                       state["evals"], state["incumbent"])


def multistart_optimize(objective, initial, n_starts=16, rng_seed=0, max_evals=500,
                        xatol=1e-4, step=0.1, perturbation=0.1, workers=1):
    """Best feasible profile over ``n_starts`` independent Nelder-Mead runs.

    Start ``k`` draws its randomness (fourier shifts, harmonic perturbations)
    from ``SeedSequence((rng_seed, k))``; start 0 of a harmonic search begins
    exactly at ``initial``. Results are reduced in start order, so the output
    does not depend on ``workers``.

    Raises
    ------
    OptomechError
        If no start found a feasible candidate.
    """
    if n_starts < 1:
        raise OptomechError("n_starts must be at least 1")
    entropies = [(int(rng_seed), k) for k in range(n_starts)]
    run = partial(_local_search, objective, initial, max_evals=max_evals, xatol=xatol,
                  step=step, perturbation=perturbation)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(n_starts), entropies))
    else:
        results = [run(k, e) for k, e in zip(range(n_starts), entropies)]

    feasible = [r for r in results if r.feasible]
    if not feasible:
        raise OptomechError("no start produced a feasible candidate")
    best = max(feasible, key=lambda r: (r.objective, -r.start))
    check = objective(best.profile)
    if not math.isclose(check, best.objective, rel_tol=1e-9, abs_tol=1e-12):
        raise OptomechError(f"objective re-evaluation mismatch: {check!r} vs {best.objective!r}")
    return OptimizationResult(
        best_profile=best.profile,
        objective=check,
        starts=n_starts,
        seeds={"root": int(rng_seed), "best_start": best.start,
               "shifts": [list(r.shifts) for r in results]},
        history=[r.objective for r in results],
        feasible=True,
        per_start=results,
    )


def robustness_check(p, profile, factors=(0.9, 1.0, 1.1), objective=None):
    """Re-evaluate a fixed profile with the mirror coupling scaled by each factor.

    Returns rows ``(factor, E_MA, relative_drop)`` with the drop measured
    against the unscaled coupling.
    """
    objective = objective or LongObjective(p)
    ref = objective_at(objective, p, profile)
    rows = []
    for f in factors:
        e = ref if f == 1.0 else objective_at(objective, p.with_chi(f), profile)
        drop = 0.0 if f == 1.0 else (ref - e) / ref if ref else 0.0
        rows.append((float(f), float(e), float(drop)))
    return rows


def objective_at(objective, p, profile):
    """Evaluate a dataclass objective on a different parameter set."""
    if getattr(objective, "p", None) is not p:
        objective = replace(objective, p=p)
    return objective(profile)
