"""Charged particle in a homogeneous pulsed field ``B(t) = B*gamma(t/T)`` along z.

In dimensionless variables the Hamiltonian is

    H = p3**2/2 - beta*gamma(tau)*M3 + (p1**2 + p2**2 + beta**2*gamma**2*(q1**2 + q2**2))/2

with ``M3 = q1*p2 - q2*p1`` and ``beta = e*B*T/(2*m*c)`` (Gaussian units).
The rotation generated by ``M3`` commutes with the isotropic transverse
oscillator, so the flow factors exactly into a rigid rotation of the
transverse plane by ``theta(tau) = beta * integral gamma`` and two identical
one-dimensional oscillators with ``lam = beta**2`` and ``phi = gamma**2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .errors import NotSpectral, UsageError
from .expr import square
from .ode import OdeSystem, half_step_samples, integrate_fixed, rk4_step, steps_for

IMAGE_THRESHOLD = 1e-5


def reduce_to_dimensionless(e: float, B: float, T: float, m: float, c: float) -> float:
    """Dimensionless field amplitude ``beta = e*B*T/(2*m*c)`` (Gaussian units)."""
    for name, value in (("e", e), ("B", B), ("T", T), ("m", m), ("c", c)):
        if not value > 0.0:
            raise UsageError(f"{name} must be positive, got {value!r}")
    return e * B * T / (2.0 * m * c)


def beta_si(e: float, B: float, T: float, m: float) -> float:
    """Same amplitude for SI inputs (coulomb, tesla, second, kilogram)."""
    return reduce_to_dimensionless(e, B, T, m, 1.0)


@dataclass(frozen=True)
class SolenoidConfig:
    beta: float
    shape: object
    T: float = 1.0

    def __post_init__(self):
        if not self.beta >= 0.0:
            raise UsageError("beta must be >= 0")

    @property
    def lam(self):
        return self.beta**2

    @property
    def phi(self):
        return square(self.shape)

    @classmethod
    def from_beta2(cls, beta2, shape, T=1.0):
        return cls(math.sqrt(beta2), shape, T)


@dataclass(frozen=True)
class ParticleState:
    tau: float
    q: tuple
    p: tuple


@dataclass(frozen=True)
class SolenoidTrajectory:
    tau: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)

    def rows(self):
        for k in range(self.tau.size):
            yield (float(self.tau[k]), *self.q[k].tolist(), *self.p[k].tolist())


@dataclass(frozen=True)
class Image:
    tau: float
    magnification: float
    rotation: float
    spread: float
    z: float


@dataclass(frozen=True)
class ImageReport:
    beta2: float
    threshold: float
    end_spread: float
    images: list

    tau_end: float = 1.0

    @property
    def interior(self):
        return self.images[:-1] if self.final is not None else list(self.images)

    @property
    def final(self):
        return self.images[-1] if self.images and self.images[-1].tau == self.tau_end else None

    def to_json(self):
        return {
            "beta2": self.beta2,
            "threshold": self.threshold,
            "end_spread": self.end_spread,
            "images": [asdict(im) for im in self.images],
            "final_image": self.final is not None,
            "interior_count": len(self.interior),
        }


class _Factored:
    """Dense transverse transfer matrices and rotation angle on a uniform tau grid."""

    def __init__(self, config, steps=None):
        shape = config.shape
        self.config = config
        self.steps = steps or steps_for(shape.length)
        self.h = shape.length / self.steps
        self.tau = np.linspace(shape.a, shape.b, self.steps + 1)
        gamma = np.asarray(half_step_samples(shape, shape.a, shape.b, self.steps))
        phi = gamma * gamma
        self.u = _kernels.linear_rk4(phi, self.h, config.lam, np.array([1.0, 0.0]), np.array([0.0, 1.0]), True)
        # Simpson per step: exact to the same order as RK4 on theta' = beta*gamma
        inc = config.beta * self.h / 6.0 * (gamma[0:-1:2] + 4.0 * gamma[1::2] + gamma[2::2])
        self.theta = np.concatenate([[0.0], np.cumsum(inc)])

    def at(self, tau):
        """``(u, theta)`` at arbitrary ``tau`` by one partial RK4 step from the grid."""
        shape, cfg = self.config.shape, self.config
        k = min(int((tau - shape.a) / self.h), self.steps)
        if tau <= self.tau[k]:
            return self.u[k], self.theta[k]
        lam = cfg.lam

        def rhs(t, y):
            g = shape(t)
            return np.array([y[1], -lam * g * g * y[0]])

        d = tau - self.tau[k]
        u = rk4_step(rhs, self.tau[k], self.u[k], d)
        g0, g1, g2 = shape(self.tau[k]), shape(self.tau[k] + 0.5 * d), shape(tau)
        return u, self.theta[k] + cfg.beta * d / 6.0 * (g0 + 4.0 * g1 + g2)


def _rotate(theta, x1, x2):
    c, s = np.cos(theta), np.sin(theta)
    return c * x1 + s * x2, -s * x1 + c * x2


def _factored_states(u, theta, elapsed, q0, p0):
    """Apply transverse maps ``u`` (..., 2, 2) and rotations ``theta`` to one initial state."""
    Q1 = u[..., 0, 0] * q0[0] + u[..., 0, 1] * p0[0]
    Q2 = u[..., 0, 0] * q0[1] + u[..., 0, 1] * p0[1]
    P1 = u[..., 1, 0] * q0[0] + u[..., 1, 1] * p0[0]
    P2 = u[..., 1, 0] * q0[1] + u[..., 1, 1] * p0[1]
    q1, q2 = _rotate(theta, Q1, Q2)
    p1, p2 = _rotate(theta, P1, P2)
    q3 = q0[2] + p0[2] * np.asarray(elapsed, dtype=float)
    p3 = np.full_like(q1, p0[2])
    return np.stack([q1, q2, q3], axis=-1), np.stack([p1, p2, p3], axis=-1)


def propagate_particle(config: SolenoidConfig, initial: ParticleState, samples: int = 201, steps: Optional[int] = None):
    """Trajectory of one particle over the pulse by the factored flow."""
    f = _Factored(config, steps)
    stride = max(1, f.steps // max(1, samples - 1))
    idx = np.unique(np.concatenate([np.arange(0, f.steps + 1, stride), [f.steps]]))
    elapsed = f.tau[idx] - f.tau[0]
    q, p = _factored_states(f.u[idx], f.theta[idx], elapsed, np.asarray(initial.q, float), np.asarray(initial.p, float))
    return SolenoidTrajectory(initial.tau + elapsed, q, p)


def direct_system(config: SolenoidConfig) -> OdeSystem:
    """The six canonical equations of the full Hamiltonian, integrated as they stand."""
    beta, shape = config.beta, config.shape

    def rhs(t, y):
        g = beta * shape(t)
        q1, q2, _, p1, p2, p3 = y
        return np.array([p1 + g * q2, p2 - g * q1, p3, g * p2 - g * g * q1, -g * p1 - g * g * q2, np.zeros_like(p3)])

    return OdeSystem(6, rhs)


def propagate_direct(config: SolenoidConfig, initial_states, steps: Optional[int] = None):
    """Final states of a batch of particles by plain 6-D RK4; shape ``(n, 6)``."""
    shape = config.shape
    steps = steps or steps_for(shape.length)
    y0 = np.array([list(s.q) + list(s.p) for s in initial_states], dtype=float).T
    return integrate_fixed(direct_system(config), y0, shape.interval, steps).T


def propagate_factored(config: SolenoidConfig, initial_states, steps: Optional[int] = None):
    """Final states by the factored flow; shape ``(n, 6)``, same layout as ``propagate_direct``."""
    f = _Factored(config, steps)
    out = []
    for s in initial_states:
        q, p = _factored_states(f.u[-1], f.theta[-1], f.tau[-1] - f.tau[0], np.asarray(s.q, float), np.asarray(s.p, float))
        out.append(np.concatenate([q, p]))
    return np.array(out)


def make_fan(q, p3, momenta=None):
    """Fan sharing position ``q`` and axial momentum ``p3``; transverse momenta on a 5x5 grid by default."""
    if momenta is None:
        grid = np.linspace(-1.0, 1.0, 5)
        momenta = [(a, b) for a in grid for b in grid]
    return [ParticleState(0.0, tuple(float(x) for x in q), (float(a), float(b), float(p3))) for a, b in momenta]


def image_report(config: SolenoidConfig, fan, steps: Optional[int] = None) -> ImageReport:
    """Every tau in ``(a, b]`` where the fan's transverse spread collapses.

    Images are local minima of the RMS transverse spread that fall below
    ``IMAGE_THRESHOLD * rms momentum spread * pulse length``.  Raises
    ``NotSpectral`` (carrying the report) when no image forms at the end of
    the pulse.
    """
    if len(fan) < 2:
        raise UsageError("a fan needs at least two particles")
    q0 = np.asarray(fan[0].q, float)
    p3 = fan[0].p[2]
    for s in fan:
        if not np.allclose(s.q, q0, rtol=0, atol=1e-15) or s.p[2] != p3:
            raise UsageError("fan members must share position and axial momentum")
    P = np.array([s.p[:2] for s in fan], dtype=float)
    dp = P - P.mean(axis=0)
    dp_rms = math.sqrt(float(np.mean(np.sum(dp * dp, axis=1))))
    if dp_rms == 0.0:
        raise UsageError("fan members must differ in transverse momentum")

    f = _Factored(config, steps)
    shape = config.shape
    threshold = IMAGE_THRESHOLD * dp_rms * shape.length

    def positions(u, theta):
        Q = u[..., 0, 0, None, None] * q0[None, :2] + u[..., 0, 1, None, None] * P
        q1, q2 = _rotate(np.asarray(theta)[..., None], Q[..., 0], Q[..., 1])
        return np.stack([q1, q2], axis=-1)

    def spread_of(pos):
        d = pos - pos.mean(axis=-2, keepdims=True)
        return np.sqrt(np.mean(np.sum(d * d, axis=-1), axis=-1))

    # the spread is rotation invariant; evaluate it without the rotation on the grid
    spread = spread_of(positions(f.u, np.zeros(f.u.shape[0])))

    def spread_at(tau):
        u, _ = f.at(tau)
        return float(spread_of(positions(u, 0.0)))

    def make_image(tau):
        u, theta = f.at(tau)
        pos = positions(u, theta)
        mean = pos.mean(axis=0)
        r2 = float(q0[0] ** 2 + q0[1] ** 2)
        if r2 > 0.0:
            back = np.array(_rotate(-theta, mean[0], mean[1]))
            mag = float(back @ q0[:2]) / r2
        else:
            mag = float(u[0, 0])
        return Image(float(tau), mag, float(theta), float(spread_of(pos)), float(q0[2] + p3 * (tau - shape.a)))

    images = []
    end_tol = 1e-6 * shape.length
    k_min = np.nonzero((spread[1:-1] <= spread[:-2]) & (spread[1:-1] < spread[2:]))[0] + 1
    for k in k_min:
        res = minimize_scalar(spread_at, bounds=(f.tau[k - 1], f.tau[k + 1]), method="bounded", options={"xatol": 1e-12})
        tau = float(res.x)
        if res.fun < threshold and shape.b - tau > end_tol:
            images.append(make_image(tau))
    final_spread = float(spread[-1])
    if final_spread < threshold:
        images.append(make_image(shape.b))
    report = ImageReport(config.lam, threshold, final_spread, images, shape.b)
    if final_spread >= threshold:
        err = NotSpectral(
            f"beta^2={config.lam:.9g} is not an eigenvalue of gamma^2: spread at the end of the pulse "
            f"{final_spread:.3g} >= threshold {threshold:.3g}"
        )
        err.report = report
        raise err
    return report
