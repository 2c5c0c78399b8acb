"""Symplectic transfer matrices of ``q' = p, p' = -lam*phi(t)*q`` and their optical constants.

Conventions
-----------
``u`` acts on column vectors ``(q, p)``.  At an eigenvalue it is lower
triangular::

    u(b, a) = [[sigma, 0], [eta, 1/sigma]]

and ``eta`` is reported in this matrix convention (the ``u21`` entry).

Writing the spectral solution as ``q = rho sin(alpha)``, ``p = rho cos(alpha)``
one finds the exact decomposition

    u(t, a) = R(alpha(t)) . D(1/rho(t)) . S(mu(t))

with ``R`` the clockwise rotation by the Prüfer angle, ``D(s) = diag(s, 1/s)``
and ``S(k) = [[1, 0], [k, 1]]``, where

    mu(t) = integral_a^t (1 - lam*phi) * (rho(a)/rho)**2 * cos(2*alpha) dt.

So the integral form of the optical constant is ``eta_integral = mu(b)``
and, because ``R(n*pi) = (-1)**n``, ``eta_matrix = mu(b) / sigma``.  The
quantum image carries the same number as the chirp ``mu(b)*x**2/(2*sigma**2)``.
``factor_check`` composes these three maps (shear first, parity last) and
compares with the directly integrated matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from . import _kernels
from .errors import NotSpectral, SigmaReciprocalMismatch, UsageError
from .ode import OdeSystem, half_step_samples, integrate_fixed, refine_until, steps_for
from .prufer import _start_steps, prufer_trajectory


@dataclass(frozen=True)
class TransferMatrix:
    u11: float
    u12: float
    u21: float
    u22: float
    lam: float
    det_residual: float

    @classmethod
    def from_array(cls, m, lam):
        m = np.asarray(m, dtype=float)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]), float(lam), float(abs(det - 1.0)))

    def as_array(self):
        return np.array([[self.u11, self.u12], [self.u21, self.u22]])

    @property
    def norm(self):
        return float(np.max(np.abs(self.as_array())))

    def is_triangular(self, tol=1e-6):
        return abs(self.u12) < tol * max(abs(self.u11), abs(self.u22), 1.0)


@dataclass(frozen=True)
class OpticalConstants:
    sigma: float
    eta: float


def hamilton_system(spec, lam: float) -> OdeSystem:
    """Hamilton's equations for ``H = p**2/2 + lam*phi(t)*q**2/2``; state ``(q, p)`` or ``(2, m)``."""

    def rhs(t, y):
        return np.array([y[1], -lam * spec(t) * y[0]])

    def fast(y0, t0, t1, steps, dense):
        phi = half_step_samples(spec, t0, t1, steps)
        q0 = np.atleast_1d(y0[0]).astype(float).ravel()
        p0 = np.atleast_1d(y0[1]).astype(float).ravel()
        out = _kernels.linear_rk4(phi, (t1 - t0) / steps, lam, q0, p0, dense)
        shape = (out.shape[0],) + np.shape(y0)
        if dense:
            return np.linspace(t0, t1, steps + 1), out.reshape(shape)
        return out[0].reshape(np.shape(y0))

    return OdeSystem(2, rhs, fast)


def evolution_matrix(spec, lam: float, tol: float = 1e-10, steps: Optional[int] = None, interval=None) -> TransferMatrix:
    """``u(b, a)``: columns are the terminal states of ``(1, 0)`` and ``(0, 1)``."""
    a, b = interval if interval is not None else spec.interval
    system = hamilton_system(spec, lam)
    if steps is None:
        start = max(2, steps_for(b - a) // 2)
        m, _ = refine_until(system, np.eye(2), (a, b), tol, start_steps=start)
    else:
        m = integrate_fixed(system, np.eye(2), (a, b), steps)
    return TransferMatrix.from_array(m, lam)


def optical_constants(u: TransferMatrix, tol: float = 1e-6) -> OpticalConstants:
    """``sigma = u11`` and ``eta = u21`` of a triangular (spectral) matrix."""
    if not u.is_triangular(tol):
        raise NotSpectral(f"|u12|={abs(u.u12):.3g} too large: lambda={u.lam:.9g} is not an eigenvalue")
    if u.u11 == 0.0 or abs(u.u22 - 1.0 / u.u11) > tol * max(1.0, abs(u.u22)):
        raise SigmaReciprocalMismatch(f"u22={u.u22:.9g} differs from 1/u11={1.0 / u.u11:.9g}")
    return OpticalConstants(u.u11, u.u21)


def _eta_raw(spec, lam, steps):
    t, alpha, log_rho = prufer_trajectory(spec, lam, steps)
    n = int(round(alpha[-1] / math.pi))
    w = lam * half_step_samples(spec, spec.a, spec.b, steps)[::2]
    integrand = (1.0 - w) * np.exp(-2.0 * log_rho) * np.cos(2.0 * alpha)
    mu = float(simpson(integrand, x=t))
    sigma = (-1) ** n * math.exp(-log_rho[-1])
    return mu, sigma, abs(alpha[-1] - n * math.pi), n


def eta_integral(
    spec, lam: float, tol: float = 1e-10, steps: Optional[int] = None, convention: str = "matrix", spectral_tol: float = 1e-6
) -> float:
    """Optical constant from the integral over the Prüfer trajectory.

    ``convention="matrix"`` (default) returns the value comparable with
    ``u21``; ``"integral"`` returns the raw integral ``mu(b)``.  Without
    ``steps`` the trajectory is refined until the result moves by less
    than ``tol`` (relative to ``max(1, |eta|)``).
    """
    if convention not in ("matrix", "integral"):
        raise UsageError(f"unknown convention {convention!r}")
    if steps is None:
        steps = _start_steps(spec)
        prev = _eta_raw(spec, lam, steps)
        while True:
            steps *= 2
            cur = _eta_raw(spec, lam, steps)
            if abs(cur[0] - prev[0]) < tol * max(1.0, abs(cur[0])) or steps >= 2**22:
                break
            prev = cur
    else:
        cur = _eta_raw(spec, lam, steps)
    mu, sigma, residual, n = cur
    if residual > spectral_tol or n < 1:
        raise NotSpectral(f"alpha(b) is {residual:.3g} away from a multiple of pi at lambda={lam:.9g}")
    return mu if convention == "integral" else mu / sigma


def factor_check(spec, result) -> float:
    """Max-norm distance between the three-factor composition and ``u(b, a)``."""
    u = evolution_matrix(spec, result.lam, steps=result.steps)
    if not u.is_triangular():
        raise NotSpectral(f"|u12|={abs(u.u12):.3g}: lambda={result.lam:.9g} is not an eigenvalue")
    mu = eta_integral(spec, result.lam, steps=result.steps, convention="integral")
    s = (-1) ** result.n * result.sigma
    shear = np.array([[1.0, 0.0], [mu, 1.0]])
    dilation = np.diag([s, 1.0 / s])
    parity = (-1.0) ** result.n * np.eye(2)
    composed = parity @ dilation @ shear
    return float(np.max(np.abs(composed - u.as_array())))
