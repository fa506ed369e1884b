"""Bipartite logarithmic negativity of the three-mode Gaussian state.

Modes are the cavity ``C`` (rows 0-1), the mirror ``M`` (rows 2-3) and the
atomic Bogoliubov mode ``A`` (rows 4-5). The vacuum has variance 1/2 and the
physicality condition reads ``nu >= 1/2`` for every symplectic eigenvalue.

All functions accept a single matrix or a stack with leading batch axes.
"""

from enum import Enum

import numpy as np

from .errors import ConditioningError, OptomechError

#: relative tolerance of the invariant-formula vs spectrum self-check
DUAL_ROUTE_RTOL = 1e-9


class ModeId(str, Enum):
    C = "C"
    M = "M"
    A = "A"

    @property
    def rows(self):
        start = {"C": 0, "M": 2, "A": 4}[self.value]
        return (start, start + 1)


def symplectic_form(n_modes):
    """Block-diagonal form ``(+) (0, 1; -1, 0)`` in xpxp ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def reduce(v, a, b):
    """4x4 covariance of modes ``a`` then ``b``."""
    a, b = ModeId(a), ModeId(b)
    if a == b:
        raise OptomechError(f"bipartition needs two distinct modes, got {a.value} twice")
    idx = np.array(a.rows + b.rows)
    v = np.asarray(v)
    return v[..., idx[:, None], idx[None, :]]


_PT = np.array([1.0, 1.0, 1.0, -1.0])


def partial_transpose(v4):
    """Flip the momentum of the second mode: ``P v4 P``, ``P = diag(1,1,1,-1)``."""
    v4 = np.asarray(v4)
    return v4 * _PT[:, None] * _PT[None, :]


def _spectrum_route(v4):
    # |eig(i W v)| equals the spectrum of the Hermitian s (iW) s, s = v^(1/2);
    # the latter is well conditioned even when iWv has near-defective eigenvectors.
    w, u = np.linalg.eigh(v4)
    if np.any(w <= 0):
        raise ConditioningError("covariance matrix is not positive definite")
    s = (u * np.sqrt(w)[..., None, :]) @ np.swapaxes(u, -1, -2)
    h = s @ (1j * symplectic_form(2)) @ s
    ev = np.linalg.eigvalsh(h)
    # eigenvalues come in +-nu pairs, sorted ascending
    return ev[..., 2], ev[..., 3]


def _invariant_route(v4):
    det_a = np.linalg.det(v4[..., 0:2, 0:2])
    det_b = np.linalg.det(v4[..., 2:4, 2:4])
    det_c = np.linalg.det(v4[..., 0:2, 2:4])
    det_v = np.linalg.det(v4)
    seralian = det_a + det_b + 2 * det_c
    disc = seralian**2 - 4 * det_v
    if np.any(disc < -1e-12 * seralian**2):
        raise ConditioningError("negative discriminant in two-mode symplectic invariants")
    root = np.sqrt(np.clip(disc, 0.0, None))
    nu_max_sq = 0.5 * (seralian + root)
    # product form avoids cancellation in (seralian - root)
    nu_min_sq = det_v / nu_max_sq
    return np.sqrt(nu_min_sq), np.sqrt(nu_max_sq)


def symplectic_eigs_2mode(v4):
    """Symplectic eigenvalues ``(nu_min, nu_max)`` of a two-mode covariance.

    Computed twice, from the determinant invariants and from the spectrum
    of ``i Omega v4``; a disagreement beyond ``DUAL_ROUTE_RTOL`` raises.
    """
    v4 = np.asarray(v4, dtype=float)
    lo1, hi1 = _invariant_route(v4)
    lo2, hi2 = _spectrum_route(v4)
    if not (np.allclose(lo1, lo2, rtol=DUAL_ROUTE_RTOL, atol=0)
            and np.allclose(hi1, hi2, rtol=DUAL_ROUTE_RTOL, atol=0)):
        err = max(np.max(np.abs(lo1 / lo2 - 1)), np.max(np.abs(hi1 / hi2 - 1)))
        raise ConditioningError(f"symplectic eigenvalue routes disagree (rel. {err:.2e})")
    return lo2, hi2


def negativity_margin(v, a, b):
    """Unclamped ``-ln(2 nu_min)`` of the partial transpose.

    Negative values measure how far a separable pair is from the
    entanglement threshold; used to locate sharp resonances.
    """
    nu_min, _ = symplectic_eigs_2mode(partial_transpose(reduce(v, a, b)))
    return -np.log(2 * nu_min)


def log_negativity(v, a, b, base="e"):
    """Logarithmic negativity between modes ``a`` and ``b``, clamped at zero.

    ``v`` is a 6x6 covariance (or a stack). ``base`` is ``"e"`` (default) or
    ``"2"``.
    """
    e = np.maximum(0.0, negativity_margin(v, a, b))
    if str(base) == "2":
        e = e / np.log(2.0)
    return e if np.ndim(e) else float(e)


def min_symplectic_eigenvalue(v):
    """Smallest symplectic eigenvalue of a full 2n x 2n covariance (or stack)."""
    v = np.asarray(v, dtype=float)
    omega = symplectic_form(v.shape[-1] // 2)
    ev = np.linalg.eigvals(1j * omega @ v)
    return np.min(np.abs(ev), axis=-1)


def pair_series(covs, base="e"):
    """``E_CM, E_CA, E_MA`` for a stack of 6x6 covariances."""
    return {
        "E_CM": log_negativity(covs, "C", "M", base),
        "E_CA": log_negativity(covs, "C", "A", base),
        "E_MA": log_negativity(covs, "M", "A", base),
    }
