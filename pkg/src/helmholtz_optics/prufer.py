"""Helmholtz eigenvalues by the angular (Prüfer) shooting method.

The second-order problem ``psi'' + lam*phi(t)*psi = 0`` with
``psi(a) = psi(b) = 0`` is written on the phase plane as ``q = rho sin(alpha)``,
``p = rho cos(alpha)``.  The angle obeys a closed first-order equation

    alpha' = cos(alpha)**2 + lam*phi(t)*sin(alpha)**2,      alpha(a) = 0

and the n-th eigenvalue is the lam for which ``alpha(b) = n*pi``.  The
log-radius ``(ln rho)' = (1 - lam*phi)/2 * sin(2*alpha)`` then gives the
amplification of the image formed at ``t = b``:
``sigma = (-1)**n * rho(a)/rho(b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import EigenvalueNotBracketed, UsageError
from .expr import require_nonneg
from .ode import (
    Bracket,
    OdeSystem,
    bracket_root,
    half_step_samples,
    integrate_fixed,
    refine_until,
    solve_root,
    steps_for,
)

SCAN_POINTS = 400
SCAN_STEPS_PER_UNIT = 1000


@dataclass(frozen=True)
class PruferState:
    t: float
    alpha: float
    log_rho: float

    @property
    def rho(self):
        return math.exp(self.log_rho)


@dataclass(frozen=True)
class SpectralResult:
    n: int
    lam: float
    sigma: float
    eta: float
    alpha_residual: float
    lambda_bracket_width: float
    steps: int

    def as_row(self):
        return {
            "n": self.n,
            "lambda": self.lam,
            "sigma": self.sigma,
            "eta": self.eta,
            "alpha_residual": self.alpha_residual,
        }


def prufer_system(spec, lam: float) -> OdeSystem:
    """The (alpha, ln rho) system for coefficient ``spec`` at ``lam``."""

    def rhs(t, y):
        w = lam * spec(t)
        s, c = np.sin(y[0]), np.cos(y[0])
        return np.array([c * c + w * s * s, 0.5 * (1.0 - w) * 2.0 * s * c])

    def fast(y0, t0, t1, steps, dense):
        phi = half_step_samples(spec, t0, t1, steps)
        out = _kernels.prufer_rk4(phi, (t1 - t0) / steps, lam, y0[0], y0[1], dense)
        if dense:
            return np.linspace(t0, t1, steps + 1), out
        return out[0]

    return OdeSystem(2, rhs, fast)


def delta_alpha(spec, lam: float, tol: float = 1e-10, steps: Optional[int] = None) -> PruferState:
    """Terminal Prüfer state at ``t = b`` starting from ``alpha(a) = 0, ln rho(a) = 0``.

    With ``steps`` omitted the step count is doubled from half the default
    density until ``alpha(b)`` and ``ln rho(b)`` settle to ``tol``.
    """
    if not math.isfinite(lam):
        raise UsageError("lambda must be finite")
    system = prufer_system(spec, lam)
    if steps is None:
        y, _ = refine_until(system, [0.0, 0.0], spec.interval, tol, start_steps=_start_steps(spec))
    else:
        y = integrate_fixed(system, [0.0, 0.0], spec.interval, steps)
    return PruferState(spec.b, float(y[0]), float(y[1]))


def prufer_trajectory(spec, lam: float, steps: Optional[int] = None):
    """Dense ``(t, alpha, ln rho)`` samples at ``steps + 1`` uniform points."""
    steps = steps or steps_for(spec.length)
    t, y = integrate_fixed(prufer_system(spec, lam), [0.0, 0.0], spec.interval, steps, dense=True)
    return t, y[:, 0], y[:, 1]


def interior_nodes(alpha):
    """Multiples of pi reached by ``alpha`` before its last sample."""
    return int(np.floor(np.max(alpha[:-1]) / math.pi))


def _start_steps(spec):
    n = steps_for(spec.length) // 2
    return n + (n % 2)


class _Scan:
    """One lambda-net scan of ``alpha(b; lam)`` shared by all requested ``n``."""

    def __init__(self, spec, n_max, lam_max=None, points=SCAN_POINTS):
        self.spec = spec
        self.coarse_steps = steps_for(spec.length, SCAN_STEPS_PER_UNIT)
        self.phi = np.asarray(half_step_samples(spec, spec.a, spec.b, self.coarse_steps))
        self.h = spec.length / self.coarse_steps

        lam_lo = 1.0 / (spec.length**2 * float(np.max(self.phi)))
        while self._alpha(lam_lo) >= math.pi:
            lam_lo *= 0.25
        if lam_max is None:
            lam_max = 4.0 * lam_lo
            for _ in range(200):
                if self._alpha(lam_max) > (n_max + 0.5) * math.pi:
                    break
                lam_max *= 2.0
        self.lam_max = float(lam_max)
        if self.lam_max <= lam_lo:
            raise UsageError(f"lambda_max={lam_max!r} is below the first eigenvalue range")
        self.grid = np.geomspace(lam_lo, self.lam_max, points)
        self.alpha = _kernels.prufer_final_batch(self.phi, self.h, self.grid)

    def _alpha(self, lam):
        return _kernels.prufer_rk4(self.phi, self.h, lam, 0.0, 0.0, False)[0, 0]

    def bracket(self, n):
        """Index pair ``(i, i+1)`` of the grid cell holding the n-th eigenvalue."""
        if self.alpha[-1] < n * math.pi:
            raise EigenvalueNotBracketed(n, self.lam_max, self.alpha[-1] / math.pi)
        lookup = dict(zip(self.grid.tolist(), self.alpha.tolist()))
        found = bracket_root(lambda lam: lookup[lam] - n * math.pi, self.grid)
        # alpha(b; lam) is strictly increasing, so there is exactly one
        b = found[0]
        i = int(np.searchsorted(self.grid, b.lo))
        return i, min(i + 1, len(self.grid) - 1)


def _fine_solver(spec, steps):
    phi = np.asarray(half_step_samples(spec, spec.a, spec.b, steps))
    h = spec.length / steps

    def terminal(lam):
        return _kernels.prufer_rk4(phi, h, lam, 0.0, 0.0, False)[0]

    return terminal


def _fine_steps(spec, lam, ode_tol):
    _, steps = refine_until(prufer_system(spec, lam), [0.0, 0.0], spec.interval, ode_tol, start_steps=_start_steps(spec))
    return steps


def _solve_one(spec, scan, n, terminal, steps, tol):
    from .transfer import evolution_matrix

    i, j = scan.bracket(n)
    target = n * math.pi
    g = lambda lam: terminal(lam)[0] - target
    # the coarse scan may misplace a root sitting right on a grid point
    while i > 0 and g(scan.grid[i]) > 0.0:
        i -= 1
    while j < len(scan.grid) - 1 and g(scan.grid[j]) < 0.0:
        j += 1
    lo, hi = float(scan.grid[i]), float(scan.grid[j])
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0.0:
        raise EigenvalueNotBracketed(n, scan.lam_max, (ghi + target) / math.pi)
    info = {}
    lam = solve_root(g, Bracket(lo, hi, glo, ghi), tol, info=info)
    alpha_b, log_rho_b = terminal(lam)
    u = evolution_matrix(spec, lam, steps=steps)
    return SpectralResult(
        n=n,
        lam=float(lam),
        sigma=float((-1) ** n * math.exp(-log_rho_b)),
        eta=float(u.u21),
        alpha_residual=float(abs(alpha_b - target)),
        lambda_bracket_width=float(info["width"]),
        steps=steps,
    )


def find_eigenvalue(spec, n: int, scan=None, tol: float = 1e-10, ode_tol: float = 1e-10) -> SpectralResult:
    """The n-th Helmholtz eigenvalue (``n >= 1``) with its optical constants.

    ``scan`` is an optional ``(lam_max, points)`` pair for the lambda net.
    """
    if n < 1:
        raise UsageError("eigenvalue index n must be >= 1")
    require_nonneg(spec)
    lam_max, points = scan if scan is not None else (None, SCAN_POINTS)
    net = _Scan(spec, n, lam_max, points)
    _, j = net.bracket(n)
    steps = _fine_steps(spec, float(net.grid[j]), ode_tol)
    return _solve_one(spec, net, n, _fine_solver(spec, steps), steps, tol)


def spectrum(spec, n_max: int, tol: float = 1e-10, ode_tol: float = 1e-10, scan=None) -> list[SpectralResult]:
    """Eigenvalues ``n = 1..n_max`` from a single lambda-net scan."""
    if n_max < 1:
        raise UsageError("n_max must be >= 1")
    require_nonneg(spec)
    lam_max, points = scan if scan is not None else (None, SCAN_POINTS)
    net = _Scan(spec, n_max, lam_max, points)
    _, j = net.bracket(n_max)
    steps = _fine_steps(spec, float(net.grid[j]), ode_tol)
    terminal = _fine_solver(spec, steps)
    return [_solve_one(spec, net, n, terminal, steps, tol) for n in range(1, n_max + 1)]
