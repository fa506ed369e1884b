"""Run configuration: flat ``key = value`` text with one documented unit per key.

Blank lines and ``#`` comments are ignored. Unknown or repeated keys are
errors reported with their line number, so a typo never silently falls back
to a default. Floats are written with ``repr`` which makes
``loads(dumps(cfg)) == cfg`` exact.
"""

import hashlib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError, ParameterError
from .params import LabInputs, validate_inputs

VARIANTS = ("constant", "fourier", "monochromatic", "harmonic")

#: key -> (unit, description); also the documentation table of the README
UNITS = {
    "omega_m_over_2pi": ("Hz", "mechanical frequency"),
    "omega_b_over_omega_m": ("1", "Bogoliubov frequency / omega_m"),
    "temperature": ("K", "bath temperature"),
    "q_factor": ("1", "mechanical quality factor"),
    "mass": ("kg", "effective mirror mass"),
    "power": ("W", "laser power"),
    "finesse": ("1", "cavity finesse"),
    "cavity_len": ("m", "cavity length"),
    "lambda_c": ("m", "optical wavelength"),
    "delta_over_omega_m": ("1", "effective detuning / omega_m"),
    "zeta_over_chi": ("1", "atom coupling / mirror coupling"),
    "dispersive_shift": ("s^-1", "static atomic detuning shift, reported only"),
    "dt_kappa": ("1/kappa", "RK4 step"),
    "min_samples": ("1", "minimum stored samples per run"),
    "t_end_kappa": ("1/kappa", "horizon of simulate and the detuning scan"),
    "log_base": ("-", "logarithm of the negativity: e or 2"),
    "profile": ("-", "constant | fourier | monochromatic | harmonic"),
    "profile_file": ("-", "serialized profile, overrides the profile keys"),
    "sigma_over_kappa": ("kappa", "modulation frequency of the periodic profiles"),
    "tau_kappa": ("1/kappa", "short-time horizon"),
    "coeffs_a": ("eta0", "A coefficients, comma separated"),
    "coeffs_b": ("eta0", "B coefficients, comma separated"),
    "j_max": ("1", "fourier harmonics"),
    "n_max": ("1", "harmonic-series harmonics"),
    "n_starts": ("1", "multistart restarts"),
    "max_evals": ("1", "objective evaluations per start"),
    "xatol": ("1", "simplex diameter tolerance in coefficient space"),
    "simplex_step": ("1", "initial simplex edge"),
    "perturbation": ("1", "std of harmonic start perturbations"),
    "seed": ("1", "root RNG seed (u64)"),
    "workers": ("1", "parallel worker processes"),
    "long_rtol": ("1", "period-to-period settling tolerance"),
    "max_periods": ("1", "period cap of the long-time orbit"),
    "min_periods": ("1", "periods integrated before testing convergence"),
    "period_samples": ("1", "samples per period"),
    "floquet_gate": ("-", "reject drives with a Floquet multiplier >= 1"),
    "delta_min": ("omega_m", "detuning scan start"),
    "delta_max": ("omega_m", "detuning scan end"),
    "delta_points": ("1", "detuning scan points"),
    "sigma_min": ("kappa", "resonance scan start"),
    "sigma_max": ("kappa", "resonance scan end"),
    "sigma_points": ("1", "resonance scan coarse points"),
    "refine_rounds": ("1", "resonance refinement rounds"),
    "refine_points": ("1", "points added per refinement round"),
    "off_resonance_sigma": ("kappa", "off-resonance reference frequency"),
    "robustness_factors": ("1", "chi scale factors, comma separated"),
    "out": ("-", "output directory"),
}


@dataclass(frozen=True)
class RunConfig:
    # physics: field names and defaults shared with LabInputs
    omega_m_over_2pi: float = LabInputs.omega_m_over_2pi
    omega_b_over_omega_m: float = LabInputs.omega_b_over_omega_m
    temperature: float = LabInputs.temperature
    q_factor: float = LabInputs.q_factor
    mass: float = LabInputs.mass
    power: float = LabInputs.power
    finesse: float = LabInputs.finesse
    cavity_len: float = LabInputs.cavity_len
    lambda_c: float = LabInputs.lambda_c
    delta_over_omega_m: float = LabInputs.delta_over_omega_m
    zeta_over_chi: float = LabInputs.zeta_over_chi
    dispersive_shift: float = LabInputs.dispersive_shift
    # integrator
    dt_kappa: float = 1e-3
    min_samples: int = 2000
    t_end_kappa: float = 10.0
    log_base: str = "e"
    # profile
    profile: str = "constant"
    profile_file: str = ""
    sigma_over_kappa: float = 0.79
    tau_kappa: float = 3.4
    coeffs_a: tuple = ()
    coeffs_b: tuple = ()
    j_max: int = 6
    n_max: int = 8
    # optimization campaigns
    n_starts: int = 16
    max_evals: int = 500
    xatol: float = 1e-4
    simplex_step: float = 0.1
    perturbation: float = 0.1
    seed: int = 0
    workers: int = 1
    long_rtol: float = 1e-4
    max_periods: int = 200
    min_periods: int = 10
    period_samples: int = 200
    floquet_gate: bool = False
    # scans
    delta_min: float = 0.5
    delta_max: float = 4.0
    delta_points: int = 64
    sigma_min: float = 0.2
    sigma_max: float = 2.0
    sigma_points: int = 64
    refine_rounds: int = 3
    refine_points: int = 16
    off_resonance_sigma: float = 3.0
    robustness_factors: tuple = (0.9, 1.0, 1.1)
    # output
    out: str = "out"

    def lab_inputs(self):
        return LabInputs(**{f.name: getattr(self, f.name) for f in fields(LabInputs)})

    def orbit_kw(self):
        """Keyword arguments of the long-time orbit integration."""
        return {"rtol": self.long_rtol, "max_periods": self.max_periods,
                "min_periods": self.min_periods, "samples": self.period_samples,
                "log_base": self.log_base}

    def with_overrides(self, **kw):
        cfg = replace(self, **{k: v for k, v in kw.items() if v is not None})
        validate(cfg)
        return cfg

    def digest(self):
        """SHA-256 of the canonical serialization."""
        return hashlib.sha256(dumps(self).encode()).hexdigest()


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _parse_list(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in text.split(","))


def _parse_value(key, text):
    kind = _TYPES[key]
    text = text.strip()
    if kind in (float, "float"):
        return float(text)
    if kind in (int, "int"):
        return int(text)
    if kind in (bool, "bool"):
        return _parse_bool(text)
    if kind in (tuple, "tuple"):
        return _parse_list(text)
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    return text


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(x)) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def validate(cfg):
    """Check ranges; raise ``ParameterError`` naming the key."""
    validate_inputs(cfg.lab_inputs())
    positive = ("dt_kappa", "t_end_kappa", "sigma_over_kappa", "tau_kappa", "xatol",
                "simplex_step", "long_rtol", "off_resonance_sigma", "sigma_min", "delta_min")
    for key in positive:
        if not getattr(cfg, key) > 0:
            raise ParameterError(key, f"must be positive, got {getattr(cfg, key)!r}")
    at_least = {"min_samples": 2, "j_max": 1, "n_max": 1, "n_starts": 1, "max_evals": 1,
                "workers": 1, "max_periods": 2, "min_periods": 2, "period_samples": 2,
                "delta_points": 2, "sigma_points": 2, "refine_rounds": 0, "refine_points": 1}
    for key, low in at_least.items():
        if getattr(cfg, key) < low:
            raise ParameterError(key, f"must be at least {low}, got {getattr(cfg, key)!r}")
    if cfg.min_periods > cfg.max_periods:
        raise ParameterError("min_periods", "must not exceed max_periods")
    if cfg.delta_max <= cfg.delta_min:
        raise ParameterError("delta_max", "must exceed delta_min")
    if cfg.sigma_max <= cfg.sigma_min:
        raise ParameterError("sigma_max", "must exceed sigma_min")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ParameterError("seed", "must be an unsigned 64-bit integer")
    if cfg.log_base not in ("e", "2"):
        raise ParameterError("log_base", f"must be 'e' or '2', got {cfg.log_base!r}")
    if cfg.profile not in VARIANTS:
        raise ParameterError("profile", f"must be one of {', '.join(VARIANTS)}")
    if not cfg.robustness_factors:
        raise ParameterError("robustness_factors", "needs at least one factor")
    if len(cfg.coeffs_b) not in (0, len(cfg.coeffs_a)):
        raise ParameterError("coeffs_b", "must be empty or as long as coeffs_a")
    return cfg


def loads(text):
    """Parse configuration text; missing keys take the defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", line=lineno) from None
    return validate(RunConfig(**values))


def load_config(path):
    """Read and validate a configuration file (an empty file gives the defaults)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror or exc}") from None
    return loads(text)


def dumps(cfg):
    """Canonical text form: every key, in declaration order."""
    lines = []
    for key, value in asdict(cfg).items():
        unit = UNITS[key][0]
        lines.append(f"{key} = {_format_value(value)}  # [{unit}]" if unit not in ("-", "1")
                     else f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"
