"""Fixed-step RK4 integration, step-doubling refinement and bracketed root finding."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, IntegrationError, UsageError

#: Step density used for all spectral work.
STEPS_PER_UNIT = 20_000
MAX_STEPS = 2**22


@dataclass(frozen=True)
class OdeSystem:
    """``y' = rhs(t, y)`` of fixed dimension.

    ``fast``, when given, is a compiled integrator with signature
    ``fast(y0, t0, t1, steps, dense)`` returning the same RK4 result as the
    generic loop; ``integrate_fixed`` prefers it.
    """

    dimension: int
    rhs: Callable
    fast: Optional[Callable] = None


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    @property
    def width(self):
        return self.hi - self.lo


def steps_for(length, per_unit=STEPS_PER_UNIT):
    """Even step count giving at least ``per_unit`` steps per unit length."""
    n = max(2, int(math.ceil(length * per_unit)))
    return n + (n % 2)


def rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_fixed(system: OdeSystem, y0, interval, steps: int, dense: bool = False):
    """Classical RK4 with ``steps`` uniform steps over ``interval``.

    Returns the final state, or ``(t, states)`` with ``states[k]`` the state
    at ``t[k]`` when ``dense`` is set.  ``y0`` may carry extra trailing
    axes (a batch of initial conditions) as long as ``rhs`` broadcasts.
    """
    t0, t1 = map(float, interval)
    if steps < 1:
        raise UsageError("steps must be >= 1")
    if not t0 < t1:
        raise UsageError("integration interval must have t0 < t1")
    y = np.array(y0, dtype=float)
    if y.shape[0] != system.dimension:
        raise UsageError(f"initial state has dimension {y.shape[0]}, system expects {system.dimension}")
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite initial state", 0)
    if system.fast is not None:
        out = system.fast(y, t0, t1, steps, dense)
        states = out[1] if dense else out
        if not np.all(np.isfinite(states)):
            bad = np.nonzero(~np.isfinite(np.reshape(states, (len(states), -1)).sum(axis=1)))[0]
            raise IntegrationError("non-finite state", int(bad[0]) if dense and bad.size else steps)
        return out

    h = (t1 - t0) / steps
    if dense:
        ts = t0 + h * np.arange(steps + 1)
        ts[-1] = t1
        ys = np.empty((steps + 1,) + y.shape)
        ys[0] = y
    for k in range(steps):
        y = rk4_step(system.rhs, t0 + k * h, y, h)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite state", k + 1)
        if dense:
            ys[k + 1] = y
    return (ts, ys) if dense else y


def refine_until(system: OdeSystem, y0, interval, tol: float, start_steps: int = 16, max_steps: int = MAX_STEPS):
    """Double the step count until successive final states agree to ``tol``.

    Returns ``(state, steps)`` for the finer of the last two runs.
    """
    if tol <= 0:
        raise UsageError("tol must be positive")
    steps = max(1, int(start_steps))
    prev = integrate_fixed(system, y0, interval, steps)
    while True:
        steps *= 2
        if steps > max_steps:
            raise ConvergenceError(f"no convergence to {tol:g} within {max_steps} steps")
        cur = integrate_fixed(system, y0, interval, steps)
        if np.max(np.abs(cur - prev)) < tol:
            return cur, steps
        prev = cur


def bracket_root(f, grid) -> list[Bracket]:
    """Every adjacent pair of ``grid`` across which ``f`` changes sign.

    Grid points where ``f`` vanishes exactly come back as degenerate
    brackets ``[x, x]``.
    """
    xs = [float(x) for x in grid]
    if len(xs) < 2:
        raise UsageError("bracket_root needs at least two grid points")
    fs = [float(f(x)) for x in xs]
    out = []
    for i, (x, fx) in enumerate(zip(xs, fs)):
        if fx == 0.0:
            out.append(Bracket(x, x, 0.0, 0.0))
            continue
        if i + 1 < len(xs) and fx * fs[i + 1] < 0.0:
            out.append(Bracket(x, xs[i + 1], fx, fs[i + 1]))
    return out


def solve_root(
    f, bracket: Bracket, tol: float = 1e-10, history: Optional[list] = None, info: Optional[dict] = None, max_iter: int = 500
) -> float:
    """Root of ``f`` inside ``bracket`` by Illinois false position with bisection fallback.

    The bracket is at least halved every two iterations, so the loop
    always terminates with width below ``tol``.  The returned value is the
    evaluated point with the smallest ``|f|``; ``history`` (if given)
    receives every improvement of that best point as ``(x, f(x))``;
    ``info`` (if given) receives the final bracket width and the number of
    evaluations.
    """
    if tol <= 0:
        raise UsageError("tol must be positive")
    lo, hi = bracket.lo, bracket.hi
    flo, fhi = bracket.f_lo, bracket.f_hi
    if lo > hi or flo * fhi > 0.0:
        raise UsageError("invalid bracket")
    if info is not None:
        info.update(width=hi - lo, evaluations=0)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi

    best = [lo, flo] if abs(flo) <= abs(fhi) else [hi, fhi]
    if history is not None:
        history.append(tuple(best))

    def consider(x, fx):
        if abs(fx) < abs(best[1]):
            best[0], best[1] = x, fx
            if history is not None:
                history.append((x, fx))

    # scaled copies of f(lo), f(hi) drive the Illinois modification
    glo, ghi = flo, fhi
    side = 0
    ref_width, since = hi - lo, 0
    evaluations = 0
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        bisect = False
        if since == 2:
            # width must halve every two iterations, else bisect
            bisect = hi - lo > 0.5 * ref_width
            ref_width, since = hi - lo, 0
        since += 1
        if not bisect:
            x = hi - ghi * (hi - lo) / (ghi - glo)
            bisect = not lo < x < hi
        if bisect:
            x = 0.5 * (lo + hi)
            if not lo < x < hi:
                break
        fx = float(f(x))
        evaluations += 1
        consider(x, fx)
        if fx == 0.0:
            hi = lo = x
            break
        if (fx < 0.0) == (flo < 0.0):
            lo, flo, glo = x, fx, fx
            if side == -1 and not bisect:
                ghi *= 0.5
            side = -1
        else:
            hi, fhi, ghi = x, fx, fx
            if side == 1 and not bisect:
                glo *= 0.5
            side = 1
    else:
        raise ConvergenceError("solve_root exceeded max_iter")
    if info is not None:
        info.update(width=hi - lo, evaluations=evaluations)
    return best[0]


@functools.lru_cache(maxsize=64)
def half_step_samples(coef, t0: float, t1: float, steps: int) -> np.ndarray:
    """``coef`` on ``t0 + j*h/2`` for ``j = 0..2*steps`` (read-only, cached)."""
    t = np.linspace(t0, t1, 2 * steps + 1)
    values = np.asarray(coef(t), dtype=float)
    values.setflags(write=False)
    return values
