"""CSV exports, profile files and the provenance manifest.

Numbers are written with ``repr`` so files are bit-exact reproductions of the
in-memory results; timestamps exist only in ``manifest.json``.
"""

import csv
import json
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from . import modulation as mod
from .scans import peak_time

TRAJECTORY_COLUMNS = ("t", "kappa_t", "eta", "E_CM", "E_CA", "E_MA", "nu_min_phys")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path):
    """Header and float columns of a numeric CSV written by this module."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in rows[1:]])
        except ValueError:
            cols[name] = [r[j] for r in rows[1:]]
    return header, cols


def write_trajectory(path, traj, p):
    e = traj.entanglement
    rows = zip(traj.times, traj.times * p.kappa, traj.eta, e["E_CM"], e["E_CA"], e["E_MA"],
               traj.nu_min_phys)
    return write_csv(path, TRAJECTORY_COLUMNS, rows)


def write_detuning_scan(path, scan):
    """Long format, one row per (detuning, time) sample."""
    header = ("delta_over_omega_m", "kappa_t", "E_CM", "E_CA", "E_MA", "status")
    rows = []
    for i, d in enumerate(scan.delta_over_omega_m):
        for j, kt in enumerate(scan.kappa_t):
            rows.append((d, kt, scan.E_CM[i, j], scan.E_CA[i, j], scan.E_MA[i, j],
                         scan.status[i]))
    return write_csv(path, header, rows)


def write_detuning_summary(path, scan):
    """Per-column peaks and peak times (parabolically refined)."""
    header = ("delta_over_omega_m", "max_E_MA", "kappa_t_max_E_MA", "max_E_CM",
              "kappa_t_max_E_CM", "status")
    rows = []
    for i, d in enumerate(scan.delta_over_omega_m):
        if scan.status[i] != "ok":
            rows.append((d, np.nan, np.nan, np.nan, np.nan, scan.status[i]))
            continue
        rows.append((d, scan.E_MA[i].max(), peak_time(scan.kappa_t, scan.E_MA[i]),
                     scan.E_CM[i].max(), peak_time(scan.kappa_t, scan.E_CM[i]), "ok"))
    return write_csv(path, header, rows)


def write_sigma_scan(path, scan):
    header = ("sigma_over_kappa", "E_MA_max", "margin", "periods", "floquet_radius", "refined",
              "status")
    rows = zip(scan.sigma_over_kappa, scan.value, scan.margin, scan.periods,
               scan.floquet_radius, scan.refined, scan.status)
    return write_csv(path, header, rows)


def write_robustness(path, rows):
    return write_csv(path, ("chi_factor", "E_MA", "relative_drop"), rows)


def write_period_profiles(path, comparison, p):
    header = ("kappa_t", "eta_monochromatic_over_eta0", "eta_optimal_over_eta0")
    t = comparison.period_t
    rows = zip(t * p.kappa, comparison.period_eta["monochromatic"] / p.eta0,
               comparison.period_eta["optimal_long"] / p.eta0)
    return write_csv(path, header, rows)


def write_profile(path, profile):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(mod.dumps(profile))
    return path


def read_profile(path):
    return mod.loads(Path(path).read_text())


def write_config(path, cfg):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cfgmod.dumps(cfg))
    return path


def write_manifest(out_dir, cfg, command, files, seeds=None, summary=None):
    """``manifest.json`` next to the outputs: version, time, config hash, seeds."""
    out_dir = Path(out_dir)
    manifest = {
        "software": "bec_optomech",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "command": command,
        "config_file": "config.cfg",
        "config_sha256": cfg.digest(),
        "seeds": seeds or {"root": cfg.seed},
        "files": sorted(str(Path(f).relative_to(out_dir)) for f in files),
        "summary": summary or {},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return path


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")
