"""Spectra by the angle method, checked against closed forms and independent discretisations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh
from scipy.optimize import brentq
from scipy.special import jv

from helmholtz_optics.errors import EigenvalueNotBracketed, PotentialError, UsageError
from helmholtz_optics.expr import parse_potential
from helmholtz_optics.prufer import delta_alpha, find_eigenvalue, interior_nodes, prufer_trajectory, spectrum
from helmholtz_optics.transfer import evolution_matrix

PI = math.pi
QUARTIC = parse_potential("(t+pi)^4", 0.0, PI)
EXPONENTIAL = parse_potential("1.1*exp(t)-1", 0.0, 1.0)
SINE = parse_potential("(1+sin(2*pi*t))^2", 0.0, 1.0)
CONSTANT = parse_potential("1", 0.0, PI)


def bessel_eigenvalues(count):
    """Exact eigenvalues for phi = x^4 on [pi, 2 pi].

    psi = sqrt(x) * Z_{1/6}(k x^3 / 3) with k = sqrt(lam); Dirichlet at both
    ends gives a cross product of J_{1/6} and J_{-1/6}.
    """
    za, zb = PI**3 / 3.0, (2.0 * PI) ** 3 / 3.0

    def det(k):
        return jv(1 / 6, k * za) * jv(-1 / 6, k * zb) - jv(-1 / 6, k * za) * jv(1 / 6, k * zb)

    ks = np.linspace(1e-4, 0.2, 4001)
    vals = det(ks)
    roots = [brentq(det, ks[i], ks[i + 1], xtol=1e-15) for i in range(len(ks) - 1) if vals[i] * vals[i + 1] < 0]
    return [k * k for k in roots[:count]]


def finite_difference_eigenvalues(f, a, b, count, n):
    h = (b - a) / (n + 1)
    t = a + h * np.arange(1, n + 1)
    lap = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
    # phi may vanish at a point; the Laplacian is the positive-definite side
    mu = eigh(np.diag(f(t)), lap, eigvals_only=True, subset_by_index=[n - count, n - 1])
    return np.sort(1.0 / mu)


def richardson_eigenvalues(f, a, b, count):
    coarse = finite_difference_eigenvalues(f, a, b, count, 799)
    fine = finite_difference_eigenvalues(f, a, b, count, 1599)
    return (4.0 * fine - coarse) / 3.0


def test_constant_coefficient_angle():
    assert delta_alpha(CONSTANT, 1.0).alpha == pytest.approx(PI, abs=1e-9)


@pytest.mark.parametrize("spec", [QUARTIC, EXPONENTIAL, SINE])
def test_zero_lambda_angle_is_arctan(spec):
    assert delta_alpha(spec, 0.0).alpha == pytest.approx(math.atan(spec.length), abs=1e-10)


def test_angle_at_published_sine_eigenvalue():
    assert delta_alpha(SINE, 5.3347146).alpha == pytest.approx(PI, abs=1e-6)


def test_constant_coefficient_spectrum():
    for r in spectrum(CONSTANT, 4):
        assert r.lam == pytest.approx(r.n**2, rel=1e-9)
        assert r.sigma == pytest.approx((-1) ** r.n, abs=1e-9)
    assert find_eigenvalue(CONSTANT, 2).lam == pytest.approx(4.0, rel=1e-9)


def test_quartic_matches_bessel_roots():
    exact = bessel_eigenvalues(3)
    for r, lam in zip(spectrum(QUARTIC, 3), exact):
        assert r.lam == pytest.approx(lam, rel=1e-9)


@pytest.mark.parametrize(
    "spec, f",
    [
        (EXPONENTIAL, lambda t: 1.1 * np.exp(t) - 1.0),
        (SINE, lambda t: (1.0 + np.sin(2.0 * np.pi * t)) ** 2),
    ],
)
def test_matches_finite_differences(spec, f):
    oracle = richardson_eigenvalues(f, spec.a, spec.b, 3)
    for r, lam in zip(spectrum(spec, 3), oracle):
        assert r.lam == pytest.approx(lam, rel=1e-6)


def test_published_first_eigenvalues():
    assert find_eigenvalue(QUARTIC, 1).lam == pytest.approx(0.00174401, rel=5e-6)
    assert find_eigenvalue(EXPONENTIAL, 1).lam == pytest.approx(11.145735, rel=1e-6)
    assert find_eigenvalue(SINE, 1).lam == pytest.approx(5.3347146, rel=1e-6)


@pytest.mark.parametrize("spec", [QUARTIC, EXPONENTIAL, SINE])
def test_sigma_is_u11_and_signs_alternate(spec):
    for r in spectrum(spec, 3):
        u = evolution_matrix(spec, r.lam)
        assert r.sigma == pytest.approx(u.u11, abs=1e-7)
        assert r.eta == pytest.approx(u.u21, abs=1e-7)
        assert math.copysign(1.0, r.sigma) == (-1) ** r.n
        assert r.alpha_residual < 1e-8
        assert r.lambda_bracket_width < 1e-9 * max(1.0, r.lam)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_node_count(n):
    r = find_eigenvalue(SINE, n)
    _, alpha, _ = prufer_trajectory(SINE, r.lam)
    assert interior_nodes(alpha) == n - 1


def test_symmetric_coefficient_has_unit_amplification():
    spec = parse_potential("(t-0.5)^2+0.25", 0.0, 1.0)
    for r in spectrum(spec, 3):
        assert abs(r.sigma) == pytest.approx(1.0, abs=1e-6)


def test_find_eigenvalue_agrees_with_spectrum():
    whole = spectrum(EXPONENTIAL, 3)
    assert find_eigenvalue(EXPONENTIAL, 3).lam == pytest.approx(whole[2].lam, rel=1e-10)


def test_not_bracketed():
    with pytest.raises(EigenvalueNotBracketed) as info:
        find_eigenvalue(CONSTANT, 3, scan=(5.0, 50))
    assert info.value.n == 3


def test_rejects_bad_input():
    with pytest.raises(UsageError):
        find_eigenvalue(CONSTANT, 0)
    with pytest.raises(PotentialError):
        spectrum(parse_potential("t-1", 0.0, 2.0), 1)


def test_trajectory_shapes():
    t, alpha, logrho = prufer_trajectory(SINE, 10.0, steps=200)
    assert t.shape == alpha.shape == logrho.shape == (201,)
    assert alpha[0] == 0.0 and logrho[0] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([QUARTIC, EXPONENTIAL, SINE]), st.floats(0.0, 1.0), st.floats(1e-3, 1.0))
def test_angle_increases_with_lambda(spec, x, dx):
    top = {QUARTIC: 0.02, EXPONENTIAL: 130.0, SINE: 100.0}[spec]
    lo = x * top
    hi = lo + dx * top
    assert delta_alpha(spec, hi, steps=4000).alpha > delta_alpha(spec, lo, steps=4000).alpha


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([QUARTIC, EXPONENTIAL, SINE]), st.floats(0.0, 100.0))
def test_angle_increases_with_t(spec, lam):
    _, alpha, _ = prufer_trajectory(spec, lam, steps=2000)
    assert np.all(np.diff(alpha) >= 0.0)
