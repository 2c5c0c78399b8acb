"""Fans of classical phase-plane trajectories and the images they form."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .expr import require_nonneg
from .ode import Bracket, integrate_fixed, rk4_step, solve_root, steps_for
from .transfer import evolution_matrix, hamilton_system

DEFAULT_MOMENTA = tuple(np.linspace(-2.0, 2.0, 11))
EVENT_TOL = 1e-10


@dataclass(frozen=True)
class PhaseTrajectory:
    lam: float
    t: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    source: tuple

    def rows(self):
        return zip(self.t.tolist(), self.q.tolist(), self.p.tolist())


@dataclass(frozen=True)
class FocusReport:
    t_image: float
    q_image: float
    spread: float
    magnification: float


@dataclass(frozen=True)
class Crossing:
    k: int
    t: float
    sigma: float


def _sampled_steps(spec, samples):
    """A step count that is a multiple of ``samples - 1`` (and even)."""
    if samples < 2:
        raise UsageError("need at least 2 samples")
    per = -(-steps_for(spec.length) // (samples - 1))
    per += per % 2
    return per * (samples - 1), per


def propagate_phase_point(spec, lam: float, q0: float, p0: float, samples: int = 1001) -> PhaseTrajectory:
    """Dense trajectory of one phase point from ``t = a`` to ``t = b``."""
    steps, stride = _sampled_steps(spec, samples)
    t, y = integrate_fixed(hamilton_system(spec, lam), [q0, p0], spec.interval, steps, dense=True)
    return PhaseTrajectory(lam, t[::stride], y[::stride, 0], y[::stride, 1], (q0, p0))


def simulate_fan(spec, lam: float, q0: float, momenta=DEFAULT_MOMENTA, samples: int = 201):
    """Propagate ``(q0, p_i)`` for every momentum and report the image at ``t = b``.

    The image position is the mean terminal ``q``; ``spread`` is the largest
    distance of a fan member from it.  For ``q0 == 0`` the image sits at
    the origin, so the magnification is taken from ``u11`` instead.
    """
    momenta = [float(p) for p in momenta]
    if len(set(momenta)) < 2:
        raise UsageError("a fan needs at least two distinct momenta")
    steps, stride = _sampled_steps(spec, samples)
    y0 = np.array([np.full(len(momenta), float(q0)), momenta])
    t, y = integrate_fixed(hamilton_system(spec, lam), y0, spec.interval, steps, dense=True)
    trajectories = [
        PhaseTrajectory(lam, t[::stride], y[::stride, 0, i], y[::stride, 1, i], (float(q0), p))
        for i, p in enumerate(momenta)
    ]
    q_end = y[-1, 0, :]
    q_image = float(np.mean(q_end))
    spread = float(np.max(np.abs(q_end - q_image)))
    if q0 != 0.0:
        magnification = q_image / q0
    else:
        magnification = evolution_matrix(spec, lam, steps=steps).u11
    return FocusReport(spec.b, q_image, spread, float(magnification)), trajectories


def crossing_scan(spec, lam: float, steps: int | None = None, event_tol: float = EVENT_TOL) -> list[Crossing]:
    """Times where the solution leaving ``q = 0`` returns to ``q = 0``, with ``u11`` there.

    Over an expanding interval every such time is an image plane of any
    fan leaving a common point; ``sigma_k`` is its magnification.
    """
    if not lam > 0.0:
        raise UsageError("crossing_scan needs lambda > 0")
    require_nonneg(spec)
    system = hamilton_system(spec, lam)
    steps = steps or steps_for(spec.length)
    # at most one zero of q per step: keep the angle advance per step small
    phi_max = float(np.max(spec(np.linspace(spec.a, spec.b, 10001))))
    while (1.0 + lam * phi_max) * spec.length / steps > 0.5:
        steps *= 2
    t, y = integrate_fixed(system, np.eye(2), spec.interval, steps, dense=True)
    h = spec.length / steps
    q = y[:, 0, 1]

    def state_at(k, tau):
        return rk4_step(system.rhs, t[k], y[k], tau - t[k]) if tau > t[k] else y[k]

    out = []
    inner = q[1:-1]
    for k in np.nonzero((inner == 0.0) | (inner * q[2:] < 0.0))[0] + 1:
        if q[k] == 0.0:
            tk = float(t[k])
        else:
            f = lambda tau: state_at(k, tau)[0, 1]
            tk = solve_root(f, Bracket(float(t[k]), float(t[k]) + h, float(q[k]), float(q[k + 1])), event_tol)
        out.append(Crossing(len(out) + 1, tk, float(state_at(k, tk)[0, 0])))
    # a zero sitting on the right end point (the spectral case) counts too
    if abs(q[-1]) < 1e-8 * max(1.0, float(np.max(np.abs(q)))) and (not out or spec.b - out[-1].t > 1e3 * event_tol):
        out.append(Crossing(len(out) + 1, float(spec.b), float(y[-1, 0, 0])))
    return out
