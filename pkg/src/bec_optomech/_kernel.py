"""Compiled fixed-step RK4 loop for the covariance equation of motion.

The drift is ``K(t) = base + g(t) * coupling`` with ``g`` the intracavity
amplitude (adiabatic following). ``g`` is supplied pre-tabulated on the
half-step grid ``t0 + i * dt / 2``, ``i = 0 .. 2 * nsteps``, which keeps trig
evaluations out of the inner loop and lets periodic drives reuse one table.
Both matrices are passed in sparse coordinate form.
"""

import numpy as np
from numba import njit

OK = 0
DIVERGED = 1
N = 6


def sparse(mat):
    """Coordinate arrays ``(rows, cols, vals)`` of the nonzeros of ``mat``."""
    r, c = np.nonzero(mat)
    return r.astype(np.int64), c.astype(np.int64), np.ascontiguousarray(mat[r, c], dtype=float)


@njit(cache=True)
def _rhs(v, br, bc, bv, cr, cc, cv, g, d, m, out):
    # out = K v + v K^T + d, using (v K^T) = (K v)^T for symmetric v
    for i in range(N):
        for j in range(N):
            m[i, j] = 0.0
    for k in range(bv.size):
        i = br[k]
        l = bc[k]
        x = bv[k]
        for j in range(N):
            m[i, j] += x * v[l, j]
    for k in range(cv.size):
        i = cr[k]
        l = cc[k]
        x = g * cv[k]
        for j in range(N):
            m[i, j] += x * v[l, j]
    for i in range(N):
        for j in range(i, N):
            s = m[i, j] + m[j, i] + d[i, j]
            out[i, j] = s
            out[j, i] = s


@njit(cache=True)
def rk4_lyapunov(v0, dt, nsteps, stride, br, bc, bv, cr, cc, cv, d, gtab, trace_cap):
    """Integrate ``nsteps`` steps from ``v0``.

    Stores the state at step 0, every ``stride``-th step and the last step.
    Returns ``(covs, steps, status, n_done)``; on divergence the stored arrays
    are truncated after the last sample.
    """
    n = N
    nsamp = nsteps // stride + 1
    if nsteps % stride != 0:
        nsamp += 1
    covs = np.empty((nsamp, n, n))
    steps = np.empty(nsamp, dtype=np.int64)

    v = v0.copy()
    m = np.empty((n, n))
    k1 = np.empty((n, n))
    k2 = np.empty((n, n))
    k3 = np.empty((n, n))
    k4 = np.empty((n, n))
    tmp = np.empty((n, n))

    covs[0] = v
    steps[0] = 0
    js = 1
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(nsteps):
        g0 = gtab[2 * step]
        gh = gtab[2 * step + 1]
        g1 = gtab[2 * step + 2]

        _rhs(v, br, bc, bv, cr, cc, cv, g0, d, m, k1)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = v[i, j] + half * k1[i, j]
        _rhs(tmp, br, bc, bv, cr, cc, cv, gh, d, m, k2)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = v[i, j] + half * k2[i, j]
        _rhs(tmp, br, bc, bv, cr, cc, cv, gh, d, m, k3)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = v[i, j] + dt * k3[i, j]
        _rhs(tmp, br, bc, bv, cr, cc, cv, g1, d, m, k4)

        for i in range(n):
            for j in range(n):
                tmp[i, j] = v[i, j] + sixth * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        tr = 0.0
        for i in range(n):
            for j in range(n):
                v[i, j] = 0.5 * (tmp[i, j] + tmp[j, i])
            tr += v[i, i]

        if not (tr < trace_cap):
            return covs[:js], steps[:js], DIVERGED, step + 1

        done = step + 1
        if done % stride == 0 or done == nsteps:
            covs[js] = v
            steps[js] = done
            js += 1
    return covs, steps, OK, nsteps


@njit(cache=True)
def _lin(x, br, bc, bv, cr, cc, cv, g, out):
    for i in range(N):
        for j in range(N):
            out[i, j] = 0.0
    for k in range(bv.size):
        i = br[k]
        l = bc[k]
        for j in range(N):
            out[i, j] += bv[k] * x[l, j]
    for k in range(cv.size):
        i = cr[k]
        l = cc[k]
        y = g * cv[k]
        for j in range(N):
            out[i, j] += y * x[l, j]


@njit(cache=True)
def rk4_fundamental(dt, nsteps, br, bc, bv, cr, cc, cv, gtab):
    """Fundamental matrix of ``X' = K(t) X``, ``X(0) = I``, after ``nsteps``."""
    n = N
    x = np.eye(n)
    k1 = np.empty((n, n))
    k2 = np.empty((n, n))
    k3 = np.empty((n, n))
    k4 = np.empty((n, n))
    tmp = np.empty((n, n))
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(nsteps):
        g0 = gtab[2 * step]
        gh = gtab[2 * step + 1]
        g1 = gtab[2 * step + 2]
        _lin(x, br, bc, bv, cr, cc, cv, g0, k1)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = x[i, j] + half * k1[i, j]
        _lin(tmp, br, bc, bv, cr, cc, cv, gh, k2)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = x[i, j] + half * k2[i, j]
        _lin(tmp, br, bc, bv, cr, cc, cv, gh, k3)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = x[i, j] + dt * k3[i, j]
        _lin(tmp, br, bc, bv, cr, cc, cv, g1, k4)
        for i in range(n):
            for j in range(n):
                x[i, j] += sixth * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    return x
