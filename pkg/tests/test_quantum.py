import math
from types import SimpleNamespace

import numpy as np
import pytest

from helmholtz_optics.errors import AliasingError, UsageError
from helmholtz_optics.expr import parse_potential
from helmholtz_optics.prufer import find_eigenvalue
from helmholtz_optics.quantum import (
    WaveGrid,
    apply_factorized_propagator,
    density_image_residual,
    density_l1,
    gaussian_packet,
    position_moments,
    split_step_evolve,
)
from helmholtz_optics.transfer import evolution_matrix

PI = math.pi
SINE = parse_potential("(1+sin(2*pi*t))^2", 0.0, 1.0)
EXPONENTIAL = parse_potential("1.1*exp(t)-1", 0.0, 1.0)
CONSTANT = parse_potential("1", 0.0, PI)


def analytic_packet(x, center=0.0, width=1.0, momentum=0.0):
    return (PI * width**2) ** -0.25 * np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * momentum * x)


@pytest.fixture(scope="module")
def sine_first():
    return find_eigenvalue(SINE, 1)


def test_gaussian_is_normalised():
    psi = gaussian_packet(0.5, 0.8, 1.2)
    assert psi.norm == pytest.approx(1.0, abs=1e-12)
    assert psi.values.size == 4096
    assert position_moments(psi)[0] == pytest.approx(0.5, abs=1e-12)
    assert position_moments(psi)[1] == pytest.approx(0.32, abs=1e-12)


def test_grid_too_narrow():
    with pytest.raises(UsageError):
        gaussian_packet(grid=(-3.0, 6.0 / 4096))


def test_identity_image():
    psi = gaussian_packet(0.3, 1.0, 0.7)
    out = apply_factorized_propagator(psi, SimpleNamespace(sigma=1.0, eta=0.0, n=2))
    np.testing.assert_allclose(out.values, psi.values, atol=1e-12)


def test_parity_image():
    psi = gaussian_packet(0.3, 1.0, 0.7)
    out = apply_factorized_propagator(psi, SimpleNamespace(sigma=-1.0, eta=0.0, n=1))
    np.testing.assert_allclose(out.values, analytic_packet(-out.x, 0.3, 1.0, 0.7), atol=1e-8)


def test_factorized_image_is_diffractionless(sine_first):
    psi = gaussian_packet(0.2, 1.0, 0.5, sigma=sine_first.sigma)
    out = apply_factorized_propagator(psi, sine_first)
    assert density_image_residual(psi, out, sine_first.sigma) < 1e-10
    assert out.norm == pytest.approx(psi.norm, rel=1e-8)
    assert out.dx == pytest.approx(psi.dx * abs(sine_first.sigma))


def test_free_packet_spreading():
    spec = parse_potential("1", 0.0, 2.0)
    psi = gaussian_packet(width=1.0, points=2048, sigma=3.0)
    out = split_step_evolve(psi, spec, 0.0, steps=200)
    s0 = position_moments(psi)[1]
    assert position_moments(out)[1] == pytest.approx(s0 + 4.0 / (4.0 * s0), abs=1e-6)
    assert out.norm == pytest.approx(psi.norm, rel=1e-8)


def test_harmonic_half_period_mirror():
    psi = gaussian_packet(2.0, 1.0, 0.5)
    out = split_step_evolve(psi, CONSTANT, 1.0, steps=4000)
    mirror = np.abs(analytic_packet(-out.x, 2.0, 1.0, 0.5)) ** 2
    assert np.sum(np.abs(out.density - mirror)) * out.dx < 1e-6


def test_split_step_matches_closed_form(sine_first):
    psi = gaussian_packet(sigma=sine_first.sigma)
    split = split_step_evolve(psi, SINE, sine_first.lam, steps=8000)
    image = apply_factorized_propagator(psi, sine_first, grid=split)
    assert density_l1(split, image) < 1e-3
    assert density_image_residual(psi, split, sine_first.sigma) < 1e-3
    assert split.norm == pytest.approx(psi.norm, rel=1e-8)


def test_moving_packet_matches_closed_form():
    r = find_eigenvalue(EXPONENTIAL, 2)
    psi = gaussian_packet(0.5, 0.7, 1.5, sigma=r.sigma)
    split = split_step_evolve(psi, EXPONENTIAL, r.lam, steps=8000)
    image = apply_factorized_propagator(psi, r, grid=split)
    assert density_l1(split, image) < 1e-3
    # the phase carries eta: compare amplitudes, not just densities, up to one global phase
    k = int(np.argmax(np.abs(split.values)))
    phase = split.values[k] / image.values[k]
    phase /= abs(phase)
    assert np.max(np.abs(split.values - phase * image.values)) < 1e-5


def test_image_law_fails_off_spectrum():
    lam1, lam2 = find_eigenvalue(SINE, 1).lam, find_eigenvalue(SINE, 2).lam
    lam = 0.5 * (lam1 + lam2)
    u = evolution_matrix(SINE, lam)
    psi = gaussian_packet(sigma=max(abs(u.u11), abs(u.u12)) + 1.0)
    out = split_step_evolve(psi, SINE, lam, steps=4000)
    assert density_image_residual(psi, out, u.u11) > 0.05


def test_time_step_refinement(sine_first):
    psi = gaussian_packet(sigma=sine_first.sigma)
    coarse = split_step_evolve(psi, SINE, sine_first.lam, steps=2000)
    fine = split_step_evolve(psi, SINE, sine_first.lam, steps=4000)
    assert density_l1(coarse, fine) < 1e-4


def test_grid_refinement():
    r = find_eigenvalue(EXPONENTIAL, 1)
    coarse = split_step_evolve(gaussian_packet(points=2048, sigma=r.sigma), EXPONENTIAL, r.lam, steps=2000)
    fine = split_step_evolve(gaussian_packet(points=4096, sigma=r.sigma), EXPONENTIAL, r.lam, steps=2000)
    assert coarse.x0 == fine.x0
    l1 = np.sum(np.abs(fine.density[::2] - coarse.density)) * coarse.dx
    assert l1 < 1e-4


def test_aliasing_detected():
    psi = gaussian_packet(points=256, grid=(-7.0, 14.0 / 256))
    with pytest.raises(AliasingError):
        split_step_evolve(psi, parse_potential("1", 0.0, 5.0), 0.0, steps=500, check_every=50)


def test_l1_requires_same_grid():
    a = gaussian_packet(points=1024)
    b = gaussian_packet(points=2048)
    with pytest.raises(UsageError):
        density_l1(a, b)


def test_write_csv(tmp_path):
    psi = WaveGrid(-1.0, 0.5, np.array([1.0, 1j, 0.5 - 0.5j, 0.0, 0.0]))
    path = tmp_path / "g.csv"
    psi.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,re_psi,im_psi,density"
    assert lines[2] == "-0.5,0,1,1"
    assert lines[3] == "0,0.5,-0.5,0.5"
    assert len(lines) == 6
