"""Entanglement campaigns for the hybrid cavity / mirror / BEC system (bec-optomech CLI).

Exit codes: 0 success, 1 usage or configuration error, 2 physics or
feasibility error, 3 numerical failure.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from . import modulation as mod
from .config import RunConfig, load_config
from .dynamics import integrate, lyapunov_steady_state, stability_check
from .entanglement import pair_series
from .errors import ConfigError, OptomechError
from .optimize import (LongObjective, ShortObjective, multistart_optimize, objective_long,
                       objective_short, robustness_check)
from .params import derive_params, detuning_shift_report, drift_matrix, noise_matrix, steady_state
from .scans import Axis, comparison_traces, detuning_scan, sigma_resonance_scan

#: stream index of every randomized campaign component under the root seed
COMPONENTS = {"simulate": 0, "optimize-short": 1, "optimize-long": 2}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def component_seed(root, name):
    """Deterministic 64-bit seed of a campaign component."""
    ss = np.random.SeedSequence([int(root), COMPONENTS[name]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _u64(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value configuration file (default: built-in)")
    common.add_argument("--out", help="output directory (overrides the 'out' key)")
    common.add_argument("--seed", type=_u64, help="root RNG seed")
    common.add_argument("--dt", type=_positive_float, help="RK4 step in units of 1/kappa")
    common.add_argument("--workers", type=_positive_int, help="parallel worker processes")

    parser = _Parser(prog="bec-optomech", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate one pump profile and export the trajectory",
        "scan-detuning": "constant-pump entanglement over detuning and time",
        "scan-sigma": "long-time resonance curve of the monochromatic modulation",
        "optimize-short": "optimize E_MA(tau) over fourier profiles",
        "optimize-long": "optimize the long-time E_MA over harmonic series",
        "robustness": "re-evaluate a fixed periodic profile with the mirror coupling scaled",
        "figures": "run the full pipeline behind all figures",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        if name == "robustness":
            p.add_argument("--profile", help="profile file (default: profile_file key)")
    return parser


def resolve_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.with_overrides(out=args.out, seed=args.seed, dt_kappa=args.dt,
                              workers=args.workers)


# --- building blocks -----------------------------------------------------------

def _clean(x):
    """JSON-safe copy: non-finite floats become None, numpy scalars plain."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dt(cfg, p):
    return cfg.dt_kappa / p.kappa


def _padded(values, n):
    values = list(values)
    if len(values) > n:
        raise ConfigError(f"got {len(values)} coefficients for {n} harmonics")
    return values + [0.0] * (n - len(values))


def build_profile(cfg, p):
    """Pump profile described by the configuration."""
    if cfg.profile_file:
        return io.read_profile(cfg.profile_file)
    sigma = cfg.sigma_over_kappa * p.kappa
    if cfg.profile == "constant":
        return mod.constant(p.eta0)
    if cfg.profile == "monochromatic":
        return mod.monochromatic(p.eta0, sigma)
    if cfg.profile == "harmonic":
        a = cfg.coeffs_a or (1.0,)
        return mod.harmonic(p.eta0, sigma, a, cfg.coeffs_b or None, cfg.n_max)
    tau = cfg.tau_kappa / p.kappa
    seed = component_seed(cfg.seed, "simulate")
    shifts = mod.draw_shifts(np.random.default_rng(seed), cfg.j_max, tau)
    prof = mod.fourier(p.eta0, tau, _padded(cfg.coeffs_a, cfg.j_max),
                       _padded(cfg.coeffs_b, cfg.j_max), shifts, seed)
    return mod.normalize_energy(prof)


def _finish(out, cfg, command, files, seeds=None, summary=None):
    files = list(files) + [io.write_config(out / "config.cfg", cfg)]
    io.write_manifest(out, cfg, command, files, seeds, _clean(summary))
    return files


def run_simulate(cfg, out):
    p = derive_params(cfg.lab_inputs())
    profile = build_profile(cfg, p)
    t_end = profile.tau if profile.variant is mod.Variant.FOURIER else cfg.t_end_kappa / p.kappa
    traj = integrate(p, profile, t_end, dt=_dt(cfg, p), min_samples=cfg.min_samples,
                     log_base=cfg.log_base)
    files = [io.write_trajectory(out / "trajectory.csv", traj, p),
             io.write_profile(out / "profile.txt", profile)]
    summary = {"max_" + k: float(np.max(v)) for k, v in traj.entanglement.items()}
    summary["final"] = {k: float(v[-1]) for k, v in traj.entanglement.items()}
    s = steady_state(p, p.eta0)
    shift_m, shift_a = detuning_shift_report(p, s)
    summary["steady_state"] = {"alpha_s": s.alpha_s, "mirror_shift_over_delta": shift_m / p.delta,
                               "atom_shift_over_delta": shift_a / p.delta}
    k = drift_matrix(p, s.alpha_s)
    summary["constant_pump_stable"] = stability_check(k)
    if profile.variant is mod.Variant.CONSTANT and summary["constant_pump_stable"]:
        v_ss = lyapunov_steady_state(k, noise_matrix(p))
        summary["steady_state_E"] = {kk: float(vv[0]) for kk, vv in
                                     pair_series(v_ss[None], cfg.log_base).items()}
    seeds = {"root": cfg.seed, "simulate": component_seed(cfg.seed, "simulate")}
    _finish(out, cfg, "simulate", files, seeds, summary)
    return summary


def run_scan_detuning(cfg, out):
    p = derive_params(cfg.lab_inputs())
    scan = detuning_scan(p, Axis("delta_over_omega_m", cfg.delta_min, cfg.delta_max,
                                 cfg.delta_points),
                         cfg.t_end_kappa, _dt(cfg, p), cfg.min_samples, cfg.workers, cfg.log_base)
    files = [io.write_detuning_scan(out / "detuning_surface.csv", scan),
             io.write_detuning_summary(out / "detuning_columns.csv", scan)]
    ordering = scan.delay_ordering()
    summary = {
        "best_delta_over_omega_m": scan.best_delta(),
        "max_E_MA": float(np.max(scan.max_e_ma)),
        "suspect_columns": scan.suspects(),
        "failed_columns": [i for i, s in enumerate(scan.status) if s != "ok"],
        "delay_ordering_columns": len(ordering),
        "delay_ordering_holds": all(r[3] for r in ordering),
    }
    _finish(out, cfg, "scan-detuning", files, summary=summary)
    return summary, scan


def run_scan_sigma(cfg, out):
    p = derive_params(cfg.lab_inputs())
    scan = sigma_resonance_scan(
        p, Axis("sigma_over_kappa", cfg.sigma_min, cfg.sigma_max, cfg.sigma_points),
        dt=_dt(cfg, p), refine_rounds=cfg.refine_rounds, refine_points=cfg.refine_points,
        workers=cfg.workers, **cfg.orbit_kw())
    files = [io.write_sigma_scan(out / "sigma_resonance.csv", scan)]
    summary = {
        "peak_sigma_over_kappa": scan.peak_location,
        "peak_E_MA": scan.peak_value,
        "peak_floquet_radius": float(scan.floquet_radius[scan.peak_index]),
        "single_interior_peak": scan.single_interior_peak(),
        "failed_points": [float(s) for s, st in zip(scan.sigma_over_kappa, scan.status)
                          if st != "ok"],
    }
    _finish(out, cfg, "scan-sigma", files, summary=summary)
    return summary, scan


def _short_problem(cfg, p):
    tau = cfg.tau_kappa / p.kappa
    zeros = [0.0] * cfg.j_max
    initial = mod.fourier(p.eta0, tau, zeros, zeros, zeros)
    return initial, ShortObjective(p, _dt(cfg, p), cfg.log_base)


def _long_problem(cfg, p, sigma):
    initial = mod.harmonic(p.eta0, sigma, n_max=cfg.n_max)
    obj = LongObjective(p, _dt(cfg, p), cfg.log_base, cfg.long_rtol, cfg.max_periods,
                        cfg.min_periods, cfg.floquet_gate)
    return initial, obj


def run_optimize_short(cfg, out):
    p = derive_params(cfg.lab_inputs())
    initial, obj = _short_problem(cfg, p)
    seed = component_seed(cfg.seed, "optimize-short")
    res = multistart_optimize(obj, initial, cfg.n_starts, seed, cfg.max_evals, cfg.xatol,
                              cfg.simplex_step, cfg.perturbation, cfg.workers)
    res.write_jsonl(out / "optimize_short.jsonl")
    const = objective_short(p, mod.constant(p.eta0), _dt(cfg, p), cfg.log_base)
    files = [out / "optimize_short.jsonl",
             io.write_profile(out / "best_short_profile.txt", res.best_profile)]
    summary = {"objective": res.objective, "constant_pump": const,
               "ratio_to_constant": res.objective / const if const else None,
               "best_start": res.seeds["best_start"]}
    _finish(out, cfg, "optimize-short", files,
            {"root": cfg.seed, "optimize-short": seed}, summary)
    return summary, res


def run_optimize_long(cfg, out, sigma_over_kappa=None):
    p = derive_params(cfg.lab_inputs())
    sigma = (sigma_over_kappa or cfg.sigma_over_kappa) * p.kappa
    initial, obj = _long_problem(cfg, p, sigma)
    seed = component_seed(cfg.seed, "optimize-long")
    res = multistart_optimize(obj, initial, cfg.n_starts, seed, cfg.max_evals, cfg.xatol,
                              cfg.simplex_step, cfg.perturbation, cfg.workers)
    res.write_jsonl(out / "optimize_long.jsonl")
    mono = obj(mod.monochromatic(p.eta0, sigma))
    off = obj(mod.monochromatic(p.eta0, cfg.off_resonance_sigma * p.kappa))
    files = [out / "optimize_long.jsonl",
             io.write_profile(out / "best_long_profile.txt", res.best_profile)]
    summary = {"objective": res.objective, "monochromatic": mono, "off_resonance": off,
               "sigma_over_kappa": sigma / p.kappa,
               "ratio_to_monochromatic": res.objective / mono if mono > 0 else None,
               "best_start": res.seeds["best_start"]}
    _finish(out, cfg, "optimize-long", files, {"root": cfg.seed, "optimize-long": seed},
            summary)
    return summary, res


def run_robustness(cfg, out, profile_path=None):
    p = derive_params(cfg.lab_inputs())
    path = profile_path or cfg.profile_file
    if not path:
        raise ConfigError("robustness needs --profile or the profile_file key")
    profile = io.read_profile(path)
    _, obj = _long_problem(cfg, p, profile.sigma or cfg.sigma_over_kappa * p.kappa)
    rows = robustness_check(p, profile, cfg.robustness_factors, obj)
    files = [io.write_robustness(out / "robustness.csv", rows)]
    summary = {"rows": [list(r) for r in rows],
               "max_drop": max(r[2] for r in rows), "profile": str(path)}
    _finish(out, cfg, "robustness", files, summary=summary)
    return summary, rows


def run_figures(cfg, out):
    """Full pipeline; one sub-directory per figure panel, each with a manifest."""
    results = {}
    results["fig1"], _ = run_scan_detuning(cfg, out / "fig1")
    p = derive_params(cfg.lab_inputs())
    traj = integrate(p, mod.constant(p.eta0), cfg.t_end_kappa / p.kappa, dt=_dt(cfg, p),
                     min_samples=cfg.min_samples, log_base=cfg.log_base)
    io.write_trajectory(out / "fig1" / "trajectory_constant.csv", traj, p)

    results["fig3a"], sig = run_scan_sigma(cfg, out / "fig3a")
    results["fig2"], short = run_optimize_short(cfg, out / "fig2")
    sigma_bar = sig.peak_location
    results["fig3b"], long_ = run_optimize_long(cfg, out / "fig3b", sigma_bar)

    comp = comparison_traces(p, short.best_profile, long_.best_profile, sigma_bar * p.kappa,
                             _dt(cfg, p), cfg.t_end_kappa, cfg.min_samples, orbit_kw=cfg.orbit_kw())
    files = []
    for label, tr in comp.traces.items():
        files.append(io.write_trajectory(out / "comparison" / f"trace_{label}.csv", tr, p))
    files.append(io.write_period_profiles(out / "comparison" / "period_profiles.csv", comp, p))
    results["comparison"] = {"ratios": comp.ratios, "orbit_values": comp.orbit_values}
    _finish(out / "comparison", cfg, "figures/comparison", files, summary=results["comparison"])

    results["robustness"], _ = run_robustness(cfg, out / "robustness",
                                              out / "fig3b" / "best_long_profile.txt")
    _finish(out, cfg, "figures", [], {"root": cfg.seed, **{
        name: component_seed(cfg.seed, name) for name in COMPONENTS}}, results)
    return results


def _report(summary):
    for key, value in _clean(summary).items():
        print(f"{key}: {value}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        cmd = args.command
        if cmd == "simulate":
            summary = run_simulate(cfg, out)
        elif cmd == "scan-detuning":
            summary, _ = run_scan_detuning(cfg, out)
        elif cmd == "scan-sigma":
            summary, _ = run_scan_sigma(cfg, out)
        elif cmd == "optimize-short":
            summary, _ = run_optimize_short(cfg, out)
        elif cmd == "optimize-long":
            summary, _ = run_optimize_long(cfg, out)
        elif cmd == "robustness":
            summary, _ = run_robustness(cfg, out, args.profile)
        else:
            summary = run_figures(cfg, out)
    except OptomechError as exc:
        print(f"bec-optomech: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"bec-optomech: error: {exc}", file=sys.stderr)
        return 1
    _report(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
