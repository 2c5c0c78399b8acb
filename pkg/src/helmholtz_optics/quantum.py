"""Wave packets under ``H = p**2/2 + lam*phi(t)*q**2/2`` (hbar = m = 1).

Two independent routes give the state at ``t = b``:

* the closed-form image at an eigenvalue,
  ``psi_U(x) = |sigma|**-0.5 * exp(i*eta_int*x**2/(2*sigma**2)) * psi(x/sigma)``,
  where ``eta_int = sigma*u21`` is the integral form of the optical
  constant; the sign of ``sigma`` is ``(-1)**n`` so ``psi(x/sigma)`` already
  contains the parity ``P**n``;
* a Strang-split Fourier propagation of the Schrödinger equation.

Global phases are not tracked; comparisons go through densities.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AliasingError, UsageError
from .ode import steps_for

GRID_POINTS = 4096
HALF_WIDTHS = 12.0
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class WaveGrid:
    """``values[k]`` is psi at ``x0 + k*dx``."""

    x0: float
    dx: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.dx > 0.0:
            raise UsageError("dx must be positive")
        values = np.asarray(self.values, dtype=complex)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.values.size)

    @property
    def density(self):
        return np.abs(self.values) ** 2

    @property
    def norm(self):
        return float(np.sum(self.density) * self.dx)

    def boundary_ratio(self):
        peak = float(np.max(np.abs(self.values)))
        edge = max(abs(self.values[0]), abs(self.values[-1]))
        return edge / peak if peak > 0.0 else 0.0

    def check_boundary(self, tol=BOUNDARY_TOL):
        ratio = self.boundary_ratio()
        if ratio >= tol:
            raise UsageError(f"grid too narrow: boundary amplitude ratio {ratio:.3g} >= {tol:g}")
        return self

    def same_grid(self, other, rtol=1e-12):
        return (
            self.values.size == other.values.size
            and abs(self.x0 - other.x0) <= rtol * max(1.0, abs(self.x0))
            and abs(self.dx - other.dx) <= rtol * self.dx
        )

    def interpolate(self, x):
        """Cubic interpolation of psi at ``x``; zero outside the grid."""
        xs = self.x
        out = np.zeros(np.shape(x), dtype=complex)
        inside = (x >= xs[0]) & (x <= xs[-1])
        if np.any(inside):
            re = CubicSpline(xs, self.values.real)(x[inside])
            im = CubicSpline(xs, self.values.imag)(x[inside])
            out[inside] = re + 1j * im
        return out

    def write_csv(self, path_or_file):
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "re_psi", "im_psi", "density"])
            for xk, v in zip(self.x.tolist(), self.values.tolist()):
                w.writerow([f"{xk:.9g}", f"{v.real:.9g}", f"{v.imag:.9g}", f"{abs(v) ** 2:.9g}"])
        finally:
            if own:
                fh.close()


def default_grid(width=1.0, center=0.0, sigma=1.0, points=GRID_POINTS, half_widths=HALF_WIDTHS):
    """``(x0, dx)`` spanning ``±half_widths`` packet widths times ``max(1, |sigma|)``."""
    scale = max(1.0, abs(sigma))
    half = (half_widths * width + abs(center)) * scale
    return -half, 2.0 * half / points


def gaussian_packet(center=0.0, width=1.0, momentum=0.0, points=GRID_POINTS, sigma=1.0, grid=None) -> WaveGrid:
    """Normalised ``(pi w**2)**-1/4 exp(-(x-c)**2/(2 w**2) + i p x)``."""
    x0, dx = grid if grid is not None else default_grid(width, center, sigma, points)
    x = x0 + dx * np.arange(points)
    psi = (math.pi * width**2) ** -0.25 * np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * momentum * x)
    return WaveGrid(x0, dx, psi).check_boundary()


def _image(psi: WaveGrid, sigma: float, eta_int: float, x0: float, dx: float, points: int):
    x = x0 + dx * np.arange(points)
    values = abs(sigma) ** -0.5 * np.exp(1j * eta_int * x**2 / (2.0 * sigma**2)) * psi.interpolate(x / sigma)
    return WaveGrid(x0, dx, values)


def apply_factorized_propagator(psi: WaveGrid, result, grid: Optional[WaveGrid] = None) -> WaveGrid:
    """The image of ``psi`` formed at an eigenvalue described by ``result``.

    By default the output grid is the input grid stretched by ``|sigma|``
    (same resolution relative to the packet); pass ``grid`` to evaluate on
    another grid instead, e.g. the one of a split-step result.
    """
    sigma, eta_matrix = float(result.sigma), float(result.eta)
    if not abs(sigma) > 1e-300:
        raise UsageError("sigma must be non-zero")
    eta_int = sigma * eta_matrix
    if grid is None:
        s = abs(sigma)
        return _image(psi, sigma, eta_int, psi.x0 * s, psi.dx * s, psi.values.size)
    return _image(psi, sigma, eta_int, grid.x0, grid.dx, grid.values.size)


def split_step_evolve(psi: WaveGrid, spec, lam: float, steps: Optional[int] = None, check_every: int = 1024) -> WaveGrid:
    """Strang-split Fourier propagation over ``[a, b]`` on the grid of ``psi``.

    Half potential kick, then alternating full kinetic drift (in momentum
    space) and full potential kick, closing with a half kick.
    """
    steps = steps or steps_for(spec.length)
    n = psi.values.size
    dt = spec.length / steps
    x = psi.x
    half_x2 = 0.5 * x * x
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=psi.dx)
    drift = np.exp(-0.5j * k * k * dt)
    t = spec.a + dt * np.arange(steps + 1)
    t[-1] = spec.b
    kick = lam * np.asarray(spec(t), dtype=float)
    edge = max(4, n // 256)

    v = np.array(psi.values) * np.exp(-1j * kick[0] * half_x2 * 0.5 * dt)
    for j in range(1, steps + 1):
        v = np.fft.ifft(np.fft.fft(v) * drift)
        w = 0.5 if j == steps else 1.0
        v *= np.exp(-1j * kick[j] * half_x2 * w * dt)
        if j % check_every == 0 or j == steps:
            _check_aliasing(v, edge, j)
    return WaveGrid(psi.x0, psi.dx, v)


def _check_aliasing(v, edge, step, tol=1e-7):
    peak = np.max(np.abs(v))
    if max(np.max(np.abs(v[:edge])), np.max(np.abs(v[-edge:]))) > tol * peak:
        raise AliasingError(f"wave reached the spatial boundary at step {step}")
    vk = np.abs(np.fft.fft(v))
    m = v.size // 2
    if np.max(vk[m - edge : m + edge]) > tol * np.max(vk):
        raise AliasingError(f"wave reached the momentum cutoff at step {step}")


def expected_image_density(psi_in: WaveGrid, sigma: float, x) -> np.ndarray:
    """``|sigma|**-1 * |psi_in(x/sigma)|**2`` at the points ``x``."""
    return np.abs(psi_in.interpolate(np.asarray(x) / sigma)) ** 2 / abs(sigma)


def density_image_residual(psi_in: WaveGrid, psi_out: WaveGrid, sigma: float) -> float:
    """Largest deviation from the diffractionless image law, relative to the peak density."""
    expected = expected_image_density(psi_in, sigma, psi_out.x)
    return float(np.max(np.abs(psi_out.density - expected)) / np.max(expected))


def density_l1(a: WaveGrid, b: WaveGrid) -> float:
    """``sum |rho_a - rho_b| dx``; grids must coincide."""
    if not a.same_grid(b):
        raise UsageError("densities live on different grids")
    return float(np.sum(np.abs(a.density - b.density)) * a.dx)


def position_moments(psi: WaveGrid):
    """Mean and variance of ``|psi|**2``."""
    rho = psi.density / np.sum(psi.density)
    mean = float(np.sum(rho * psi.x))
    return mean, float(np.sum(rho * (psi.x - mean) ** 2))
