"""Compiled RK4 loops for the two systems driven by a sampled coefficient.

``phi`` always holds the coefficient on the half-step grid
``t0 + j*h/2, j = 0..2*steps``, which is exactly the set of points RK4
touches; the arithmetic mirrors :func:`helmholtz_optics.ode.rk4_step`.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _prufer_rhs(a, lam_phi):
    s = math.sin(a)
    c = math.cos(a)
    return c * c + lam_phi * s * s, 0.5 * (1.0 - lam_phi) * 2.0 * s * c


@njit(cache=True)
def prufer_rk4(phi, h, lam, alpha0, logrho0, dense):
    steps = (phi.size - 1) // 2
    rows = steps + 1 if dense else 1
    out = np.empty((rows, 2))
    a = alpha0
    r = logrho0
    out[0, 0] = a
    out[0, 1] = r
    for k in range(steps):
        l0 = lam * phi[2 * k]
        l1 = lam * phi[2 * k + 1]
        l2 = lam * phi[2 * k + 2]
        ka1, kr1 = _prufer_rhs(a, l0)
        ka2, kr2 = _prufer_rhs(a + 0.5 * h * ka1, l1)
        ka3, kr3 = _prufer_rhs(a + 0.5 * h * ka2, l1)
        ka4, kr4 = _prufer_rhs(a + h * ka3, l2)
        a = a + (h / 6.0) * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
        r = r + (h / 6.0) * (kr1 + 2.0 * kr2 + 2.0 * kr3 + kr4)
        if dense:
            out[k + 1, 0] = a
            out[k + 1, 1] = r
    if not dense:
        out[0, 0] = a
        out[0, 1] = r
    return out


@njit(cache=True)
def prufer_final_batch(phi, h, lams):
    """Terminal Prüfer angle for many lambda values."""
    out = np.empty(lams.size)
    for i in range(lams.size):
        out[i] = prufer_rk4(phi, h, lams[i], 0.0, 0.0, False)[0, 0]
    return out


@njit(cache=True)
def linear_rk4(phi, h, lam, q0, p0, dense):
    """RK4 for ``q' = p, p' = -lam*phi(t)*q`` on a batch of initial states.

    Returns an array of shape ``(rows, 2, m)``.
    """
    steps = (phi.size - 1) // 2
    m = q0.size
    rows = steps + 1 if dense else 1
    out = np.empty((rows, 2, m))
    for j in range(m):
        q = q0[j]
        p = p0[j]
        out[0, 0, j] = q
        out[0, 1, j] = p
        for k in range(steps):
            w0 = lam * phi[2 * k]
            w1 = lam * phi[2 * k + 1]
            w2 = lam * phi[2 * k + 2]
            kq1 = p
            kp1 = -w0 * q
            kq2 = p + 0.5 * h * kp1
            kp2 = -w1 * (q + 0.5 * h * kq1)
            kq3 = p + 0.5 * h * kp2
            kp3 = -w1 * (q + 0.5 * h * kq2)
            kq4 = p + h * kp3
            kp4 = -w2 * (q + h * kq3)
            q = q + (h / 6.0) * (kq1 + 2.0 * kq2 + 2.0 * kq3 + kq4)
            p = p + (h / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4)
            if dense:
                out[k + 1, 0, j] = q
                out[k + 1, 1, j] = p
        if not dense:
            out[0, 0, j] = q
            out[0, 1, j] = p
    return out
