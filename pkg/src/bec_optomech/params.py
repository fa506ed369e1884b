"""Physical parameters, classical steady state and the linearized matrices.

Internal units are SI: angular frequencies and rates in s^-1, times in s.
The fluctuation vector is ordered ``(x, y, q, p, Q, P)``: cavity
quadratures, dimensionless mirror quadratures, Bogoliubov-mode quadratures.

The default optical wavelength is 35 um rather than 780 nm. At 780 nm the
radiation-pressure coupling ``sqrt(2) chi alpha_s`` exceeds the static
stability threshold for every detuning in ``[0.5, 4] omega_m`` (largest
drift eigenvalue ~ +0.6 kappa), so no steady state or periodic orbit
exists. At 35 um the constant pump is stable and the short- and long-time
entanglement values fall in the reference range. ``lambda_c`` stays a
config key, so 780 nm runs remain available.
"""

from dataclasses import dataclass, fields, replace

import numpy as np
from scipy import constants

from .errors import ParameterError

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class LabInputs:
    """Raw laboratory inputs.

    Defaults are the reference parameter set of the hybrid
    cavity/mirror/BEC setup, with the pump detuning at the short-time
    optimum ``2.7 omega_m``.
    """

    omega_m_over_2pi: float = 3e6  # Hz
    omega_b_over_omega_m: float = 1.0
    temperature: float = 10e-6  # K
    q_factor: float = 3e4
    mass: float = 50e-12  # kg (50 ng)
    power: float = 50e-3  # W
    finesse: float = 1e4
    cavity_len: float = 1e-3  # m
    lambda_c: float = 35e-6  # m, see module docstring
    delta_over_omega_m: float = 2.7
    zeta_over_chi: float = 1.0
    dispersive_shift: float = 0.0  # s^-1, the g^2 N0 / 2 Delta_a term


@dataclass(frozen=True)
class SystemParams:
    omega_m: float
    omega_b: float
    T: float
    Q_factor: float
    mass: float
    power: float
    finesse: float
    cavity_len: float
    lambda_c: float
    delta: float
    zeta: float
    chi: float
    kappa: float
    gamma: float
    nbar: float
    eta0: float
    dispersive_shift: float = 0.0

    @property
    def omega_laser(self):
        return 2 * np.pi * constants.c / self.lambda_c

    @property
    def detuning_norm(self):
        """``sqrt(delta^2 + kappa^2)``, converts pump rate to amplitude."""
        return float(np.hypot(self.delta, self.kappa))

    def with_chi(self, factor):
        """Copy with the mirror coupling scaled and the atom coupling kept."""
        return replace(self, chi=self.chi * factor)

    def with_delta(self, delta):
        return replace(self, delta=float(delta))


@dataclass(frozen=True)
class SteadyState:
    alpha_s: float
    q_shift: float
    Q_shift: float


_STRICT_POSITIVE = (
    "omega_m_over_2pi",
    "omega_b_over_omega_m",
    "temperature",
    "q_factor",
    "mass",
    "power",
    "finesse",
    "cavity_len",
    "lambda_c",
    "delta_over_omega_m",
    "zeta_over_chi",
)


def validate_inputs(inputs):
    for name in _STRICT_POSITIVE:
        value = getattr(inputs, name)
        if not np.isfinite(value) or value <= 0:
            raise ParameterError(name, f"must be positive and finite, got {value!r}")
    if not np.isfinite(inputs.dispersive_shift):
        raise ParameterError("dispersive_shift", "must be finite")


def derive_params(inputs=None):
    """Compute every rate of the model from laboratory inputs.

    Parameters
    ----------
    inputs : LabInputs, optional
        Raw inputs; ``LabInputs()`` when omitted.

    Returns
    -------
    SystemParams

    Raises
    ------
    ParameterError
        If any input is non-positive; the error names the offending field.
    """
    if inputs is None:
        inputs = LabInputs()
    validate_inputs(inputs)
    c, hbar, k_b = constants.c, constants.hbar, constants.k

    omega_m = 2 * np.pi * inputs.omega_m_over_2pi
    omega_l = 2 * np.pi * c / inputs.lambda_c
    kappa = np.pi * c / (2 * inputs.cavity_len * inputs.finesse)
    gamma = omega_m / inputs.q_factor
    nbar = 1.0 / np.expm1(hbar * omega_m / (k_b * inputs.temperature))
    # omega_L ~ omega_C: the detuning is ~1e-8 of the optical frequency
    chi = (omega_l / inputs.cavity_len) * np.sqrt(hbar / (inputs.mass * omega_m))
    eta0 = np.sqrt(2 * kappa * inputs.power / (hbar * omega_l))

    return SystemParams(
        omega_m=float(omega_m),
        omega_b=float(omega_m * inputs.omega_b_over_omega_m),
        T=float(inputs.temperature),
        Q_factor=float(inputs.q_factor),
        mass=float(inputs.mass),
        power=float(inputs.power),
        finesse=float(inputs.finesse),
        cavity_len=float(inputs.cavity_len),
        lambda_c=float(inputs.lambda_c),
        delta=float(omega_m * inputs.delta_over_omega_m),
        zeta=float(chi * inputs.zeta_over_chi),
        chi=float(chi),
        kappa=float(kappa),
        gamma=float(gamma),
        nbar=float(nbar),
        eta0=float(eta0),
        dispersive_shift=float(inputs.dispersive_shift),
    )


def steady_state(p, eta):
    """Classical mean values for a constant pump rate ``eta``.

    The intracavity amplitude is taken real and positive. Shifts are in the
    dimensionless quadrature units of the fluctuation vector.
    """
    if eta < 0:
        raise ParameterError("eta", f"pump rate must be non-negative, got {eta!r}")
    alpha = eta / p.detuning_norm
    n_phot = alpha * alpha
    return SteadyState(
        alpha_s=float(alpha),
        q_shift=float(p.chi * n_phot / p.omega_m),
        Q_shift=float(-p.zeta * n_phot / p.omega_b),
    )


def detuning_shift_report(p, s):
    """Radiation-pressure and atomic contributions to the cavity detuning.

    Returns ``(chi * q_shift, zeta * Q_shift)`` in s^-1. The effective
    detuning carries them as ``- chi q_s + zeta Q_s`` next to
    ``p.dispersive_shift``; ``p.delta`` stays an independent input either way.
    """
    return p.chi * s.q_shift, p.zeta * s.Q_shift


def drift_matrix(p, alpha_s):
    """6x6 drift matrix of the linearized fluctuation dynamics."""
    g_m = SQRT2 * p.chi * alpha_s
    g_a = SQRT2 * p.zeta * alpha_s
    k = np.zeros((6, 6))
    k[0, 0] = k[1, 1] = -p.kappa
    k[0, 1] = p.delta
    k[1, 0] = -p.delta
    k[1, 2] = k[3, 0] = g_m
    k[1, 4] = k[5, 0] = -g_a
    k[2, 3] = p.omega_m
    k[3, 2] = -p.omega_m
    k[3, 3] = -p.gamma
    k[4, 5] = p.omega_b
    k[5, 4] = -p.omega_b
    return k


def drift_parts(p):
    """Split ``drift_matrix(p, a) = base + a * coupling`` for the integrator."""
    base = drift_matrix(p, 0.0)
    coupling = np.zeros((6, 6))
    coupling[1, 2] = coupling[3, 0] = SQRT2 * p.chi
    coupling[1, 4] = coupling[5, 0] = -SQRT2 * p.zeta
    return base, coupling


def noise_matrix(p):
    return np.diag([p.kappa, p.kappa, 0.0, p.gamma * (2 * p.nbar + 1), 0.0, 0.0])


def params_summary(p):
    return {f.name: getattr(p, f.name) for f in fields(p)}
