"""Independent constructions used as test oracles."""

import numpy as np
from scipy.linalg import expm


def symplectic_form(n_modes):
    w = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), w)


def random_symplectic(rng, n_modes, scale=0.5):
    """``exp(Omega H)`` with random symmetric ``H`` is symplectic."""
    h = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
    h = 0.5 * (h + h.T)
    return expm(symplectic_form(n_modes) @ h)


def random_physical_cm(rng, n_modes=2, scale=0.5, max_thermal=2.0):
    """Williamson form ``S diag(nu) S^T`` with every ``nu >= 1/2``."""
    s = random_symplectic(rng, n_modes, scale)
    nu = 0.5 + rng.uniform(0, max_thermal, n_modes)
    return s @ np.diag(np.repeat(nu, 2)) @ s.T


def two_mode_squeezed(r):
    """Two-mode squeezed vacuum, vacuum variance 1/2."""
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    return 0.5 * np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])


def embed(v4, a_rows, b_rows):
    """Place a two-mode CM into a 6x6 vacuum background."""
    v = 0.5 * np.eye(6)
    idx = list(a_rows) + list(b_rows)
    v[np.ix_(idx, idx)] = v4
    return v


def exact_constant_drift(k, d, v0, t):
    """``V(t)`` for constant drift: ``e^{Kt} (V0 - Vss) e^{K^T t} + Vss``."""
    from scipy.linalg import solve_continuous_lyapunov
    vss = solve_continuous_lyapunov(k, -d)
    e = expm(k * t)
    return e @ (v0 - vss) @ e.T + vss


def entrywise_rel(a, ref, floor=1e-9):
    """Largest entrywise relative deviation; entries below ``floor * max|ref|``
    (analytically zero ones) are measured against that floor instead."""
    ref = np.asarray(ref)
    scale = np.maximum(np.abs(ref), floor * np.max(np.abs(ref)))
    return float(np.max(np.abs(np.asarray(a) - ref) / scale))
