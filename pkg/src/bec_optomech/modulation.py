"""Time-dependent pump profiles.

Four variants, all reducible to ``c0 + sum_k a_k cos(w_k t) + b_k sin(w_k t)``:

``constant``
    ``eta0``.
``fourier``
    ``eta0 * (1 + sum_j A_j cos(w_j t) + B_j sin(w_j t))`` with
    ``w_j = 2 pi j / tau + delta_j``; used for the short-time control window.
``monochromatic``
    ``eta0/8 + eta0/2 * (1 - sin(sigma t))``.
``harmonic``
    ``eta0/8 + eta0/2 * (1 - sum_n A_n sin(n sigma t) + B_n cos(n sigma t))``
    with ``sum_n A_n^2 + B_n^2 <= 1``.

Coefficients are dimensionless (relative to ``eta0``). Profiles are
immutable; every transformation returns a new one.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConfigError, FeasibilityError

#: sample count per horizon/period for the positivity check
POSITIVITY_SAMPLES = 10_000
#: relative tolerance on the mean-square energy constraint
ENERGY_RTOL = 1e-9
#: default maximum random frequency shift, in units of 2 pi / tau
SHIFT_FRACTION = 0.05

# eta0'' and eta0' of the periodic variants, relative to eta0
BASE_FRACTION = 1 / 8
SWING_FRACTION = 1 / 2


class Variant(str, Enum):
    CONSTANT = "constant"
    FOURIER = "fourier"
    MONOCHROMATIC = "monochromatic"
    HARMONIC = "harmonic"


@dataclass(frozen=True)
class PumpProfile:
    """Pump rate ``eta(t)`` in s^-1.

    ``shifts`` (s^-1) and ``tau`` (s) are used by the ``fourier`` variant,
    ``sigma`` (s^-1) by the periodic ones. ``seed`` records where random
    shifts came from and is carried through serialization only.
    """

    variant: Variant
    eta0: float
    coeffs_a: tuple = ()
    coeffs_b: tuple = ()
    shifts: tuple = ()
    tau: float = 0.0
    sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("coeffs_a", "coeffs_b", "shifts"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if len(self.coeffs_a) != len(self.coeffs_b):
            raise FeasibilityError("coefficient vectors A and B differ in length")
        if self.variant is Variant.FOURIER:
            if len(self.shifts) != len(self.coeffs_a):
                raise FeasibilityError("fourier profile needs one shift per harmonic")
            if not self.tau > 0:
                raise FeasibilityError("fourier profile needs tau > 0")
        if self.variant in (Variant.MONOCHROMATIC, Variant.HARMONIC) and not self.sigma > 0:
            raise FeasibilityError("periodic profile needs sigma > 0")

    @property
    def coeffs(self):
        return np.array(self.coeffs_a + self.coeffs_b)

    def with_coeffs(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        n = coeffs.size // 2
        return replace(self, coeffs_a=tuple(coeffs[:n]), coeffs_b=tuple(coeffs[n:]))

    @property
    def period(self):
        """Horizon of the fourier variant, modulation period otherwise.

        The constant variant reports a nominal 1 s sampling window.
        """
        if self.variant is Variant.FOURIER:
            return self.tau
        if self.variant is Variant.CONSTANT:
            return 1.0
        return 2 * math.pi / self.sigma

    @property
    def frequencies(self):
        n = len(self.coeffs_a)
        if self.variant is Variant.FOURIER:
            return 2 * np.pi * np.arange(1, n + 1) / self.tau + np.array(self.shifts)
        if self.variant is Variant.HARMONIC:
            return self.sigma * np.arange(1, n + 1, dtype=float)
        return np.array([self.sigma]) if self.variant is Variant.MONOCHROMATIC else np.zeros(0)

    def series(self):
        """``(c0, a, b, w)`` with absolute cos/sin amplitudes in s^-1."""
        e = self.eta0
        a = np.array(self.coeffs_a)
        b = np.array(self.coeffs_b)
        w = self.frequencies
        if self.variant is Variant.CONSTANT:
            return e, np.zeros(0), np.zeros(0), w
        if self.variant is Variant.FOURIER:
            return e, e * a, e * b, w
        c0 = e * (BASE_FRACTION + SWING_FRACTION)
        if self.variant is Variant.MONOCHROMATIC:
            return c0, np.zeros(1), np.array([-SWING_FRACTION * e]), w
        # harmonic: A_n multiplies sin, B_n multiplies cos
        return c0, -SWING_FRACTION * e * b, -SWING_FRACTION * e * a, w

    def __call__(self, t):
        return evaluate(self, t)


def constant(eta0):
    return PumpProfile(Variant.CONSTANT, float(eta0))


def monochromatic(eta0, sigma):
    return PumpProfile(Variant.MONOCHROMATIC, float(eta0), sigma=float(sigma))


def harmonic(eta0, sigma, a=(1.0,), b=None, n_max=8):
    """Harmonic series at ``sigma``; missing coefficients are padded with zeros."""
    a = list(a) + [0.0] * (n_max - len(a))
    b = [0.0] * n_max if b is None else list(b) + [0.0] * (n_max - len(b))
    if len(a) != n_max or len(b) != n_max:
        raise FeasibilityError(f"at most n_max={n_max} harmonics allowed")
    return PumpProfile(Variant.HARMONIC, float(eta0), tuple(a), tuple(b), sigma=float(sigma))


def draw_shifts(rng, j_max, tau, fraction=SHIFT_FRACTION):
    """Uniform random frequency shifts in ``[-fraction, fraction] * 2 pi / tau``."""
    return tuple(rng.uniform(-fraction, fraction, size=j_max) * (2 * math.pi / tau))


def fourier(eta0, tau, a, b, shifts, seed=None):
    return PumpProfile(Variant.FOURIER, float(eta0), tuple(a), tuple(b),
                       shifts=tuple(shifts), tau=float(tau), seed=seed)


def evaluate(profile, t):
    """Pump rate at time(s) ``t``."""
    c0, a, b, w = profile.series()
    t = np.asarray(t, dtype=float)
    phase = np.multiply.outer(t, w)
    out = c0 + np.cos(phase) @ a + np.sin(phase) @ b
    return out if out.ndim else float(out)


def _window_means(w, tau):
    """Means over ``[0, tau]`` of cos(w t) and sin(w t), elementwise in ``w``."""
    x = np.asarray(w, dtype=float) * tau
    mean_cos = np.sinc(x / np.pi)
    mean_sin = 0.5 * x * np.sinc(x / (2 * np.pi)) ** 2
    return mean_cos, mean_sin


def _fourier_moments(profile):
    """Mean and Gram matrix of the basis ``[cos w_j t..., sin w_j t...]`` on [0, tau]."""
    w = profile.frequencies
    tau = profile.tau
    mc, ms = _window_means(w, tau)
    mean = np.concatenate([mc, ms])
    dc, ds = _window_means(np.subtract.outer(w, w), tau)
    sc, ss = _window_means(np.add.outer(w, w), tau)
    cc = 0.5 * (dc + sc)
    sn = 0.5 * (dc - sc)
    # cos(w_k t) sin(w_l t) = [sin((w_k + w_l) t) - sin((w_k - w_l) t)] / 2
    cs = 0.5 * (ss - ds)
    gram = np.block([[cc, cs], [cs.T, sn]])
    return mean, gram


def mean_square(profile):
    """Mean of ``eta(t)^2`` over the fourier horizon, in closed form."""
    if profile.variant is not Variant.FOURIER:
        raise FeasibilityError("closed-form energy is defined for fourier profiles")
    mean, gram = _fourier_moments(profile)
    c = profile.coeffs
    return profile.eta0**2 * (1 + 2 * mean @ c + c @ gram @ c)


def normalize_energy(profile):
    """Rescale coefficients so the mean-square pump equals ``eta0^2``.

    The coefficients are multiplied by the positive root of
    ``2 s <f> + s^2 <f^2> = 0``, ``f`` being the relative modulation.

    Raises
    ------
    FeasibilityError
        If the modulation has positive mean, so no positive root exists.
        A modulation with zero mean (exact harmonics) is scaled to zero.
    """
    c = profile.coeffs
    if not np.any(c):
        return profile
    mean, gram = _fourier_moments(profile)
    first = mean @ c
    second = c @ gram @ c
    if abs(first) <= 1e-12 * np.sqrt(second):
        # modulation orthogonal to the DC term: only s = 0 conserves energy
        return profile.with_coeffs(np.zeros_like(c))
    scale = -2 * first / second
    if not scale > 0:
        raise FeasibilityError("energy constraint has no positive rescaling root")
    return profile.with_coeffs(scale * c)


def pump_minimum(profile, samples=POSITIVITY_SAMPLES):
    t = np.linspace(0.0, profile.period, samples)
    return float(np.min(evaluate(profile, t)))


def positivity_bound(profile):
    """Triangle-inequality lower bound on ``eta(t)``."""
    c0, a, b, _ = profile.series()
    return c0 - float(np.sum(np.hypot(a, b)))


def is_positive(profile):
    if positivity_bound(profile) >= 0:
        return True
    return pump_minimum(profile) >= 0


def ball_norm_sq(profile):
    return float(np.sum(profile.coeffs**2))


def feasibility(profile):
    """True iff the profile satisfies the constraints of its variant."""
    if not profile.eta0 > 0:
        return False
    if profile.variant is Variant.FOURIER:
        if not np.any(profile.coeffs):
            return True
        if abs(mean_square(profile) / profile.eta0**2 - 1) > ENERGY_RTOL:
            return False
    if profile.variant is Variant.HARMONIC and ball_norm_sq(profile) > 1 + 1e-12:
        return False
    return is_positive(profile)


def project_to_ball(coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    norm = np.linalg.norm(coeffs)
    return coeffs / norm if norm > 1 else coeffs


def adiabatic_rate(profile, kappa, samples=2000):
    """Largest relative pump change per ``1/kappa`` over one period."""
    c0, a, b, w = profile.series()
    if w.size == 0:
        return 0.0
    t = np.linspace(0.0, profile.period, samples)
    phase = np.multiply.outer(t, w)
    deta = -np.sin(phase) @ (a * w) + np.cos(phase) @ (b * w)
    eta = evaluate(profile, t)
    with np.errstate(divide="ignore"):
        return float(np.max(np.abs(deta) / (kappa * np.abs(eta))))


# --- serialization --------------------------------------------------------

def to_dict(profile):
    return {
        "variant": profile.variant.value,
        "eta0": profile.eta0,
        "coeffs_a": list(profile.coeffs_a),
        "coeffs_b": list(profile.coeffs_b),
        "shifts": list(profile.shifts),
        "tau": profile.tau,
        "sigma": profile.sigma,
        "seed": profile.seed,
    }


def from_dict(d):
    return PumpProfile(
        Variant(d["variant"]), float(d["eta0"]), tuple(d["coeffs_a"]), tuple(d["coeffs_b"]),
        tuple(d["shifts"]), float(d["tau"]), float(d["sigma"]), d.get("seed"),
    )


def _floats(xs):
    return ", ".join(repr(float(x)) for x in xs)


def dumps(profile):
    """Profile as ``key = value`` lines; floats use ``repr`` so reloading is exact."""
    d = to_dict(profile)
    lines = [f"variant = {d['variant']}"]
    for key in ("eta0", "tau", "sigma"):
        lines.append(f"{key} = {d[key]!r}")
    for key in ("coeffs_a", "coeffs_b", "shifts"):
        lines.append(f"{key} = {_floats(d[key])}")
    lines.append(f"seed = {'' if d['seed'] is None else d['seed']}")
    return "\n".join(lines) + "\n"


def loads(text):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    expected = {"variant", "eta0", "tau", "sigma", "coeffs_a", "coeffs_b", "shifts", "seed"}
    if set(raw) != expected:
        raise ConfigError(f"profile keys must be exactly {sorted(expected)}")

    def arr(s):
        return [float(x) for x in s.split(",")] if s else []

    return from_dict({
        "variant": raw["variant"],
        "eta0": float(raw["eta0"]),
        "tau": float(raw["tau"]),
        "sigma": float(raw["sigma"]),
        "coeffs_a": arr(raw["coeffs_a"]),
        "coeffs_b": arr(raw["coeffs_b"]),
        "shifts": arr(raw["shifts"]),
        "seed": int(raw["seed"]) if raw["seed"] else None,
    })
