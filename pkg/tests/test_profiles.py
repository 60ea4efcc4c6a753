import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from degenwave.core import Params, make_flux, quad_compact
from degenwave.errors import CaseUnsupported, DegenerateSecondDerivative, InvalidParams, OutOfBranch
from degenwave.profiles import (barenblatt, contact_dx_norm, contact_dxx_norm, contact_flux_dx_norm,
                                contact_point_X, contact_wave, contact_wave_dx, contact_wave_dxx,
                                exact_rarefaction, multiwave, multiwave_case, remainder_Fp,
                                selfsimilar_constants, smooth_rarefaction, smooth_rarefaction_dx,
                                smoothed_multiwave, support_radius, tilde_U, tilde_U_dx)

RED = make_flux("reduced_quadratic")
PS = (1.2, 1.5, 2.0, 3.0)


def test_constants_p2():
    c = selfsimilar_constants(2.0, 1.0, 1.0)
    assert c.B == pytest.approx(1 / 12, rel=1e-15)
    assert c.I_p == pytest.approx(2 / 3, rel=1e-12)
    assert c.A == pytest.approx((9 / 192) ** (1 / 3), rel=1e-12)
    assert c.A == pytest.approx(0.36059, abs=1e-4)
    assert abs(c.normalization_residual()) <= 1e-10


@given(st.sampled_from(PS + (4.0,)), st.floats(min_value=0.05, max_value=20),
       st.floats(min_value=0.05, max_value=20))
def test_normalization_identity(p, mu, mass):
    c = selfsimilar_constants(p, mu, mass)
    lhs = 2 * c.A ** ((p + 1) / (2 * (p - 1))) * c.B**-0.5 * c.I_p
    assert lhs == pytest.approx(mass, rel=1e-10)


@pytest.mark.parametrize("args", [(1.0, 1, 1), (2, 0, 1), (2, 1, 0), (2, 1, -1)])
def test_constants_reject(args):
    with pytest.raises(InvalidParams):
        selfsimilar_constants(*args)


def test_barenblatt_examples():
    c = selfsimilar_constants(2.0, 1.0, 1.0)
    assert barenblatt(2, 1, 1, 0.0, 0.0) == pytest.approx(c.A, rel=1e-14)
    assert c.radius == pytest.approx(2.0801, abs=1e-3)
    assert barenblatt(2, 1, 1, 0.0, 3.0) == 0.0
    assert support_radius(2, 1, 1, 1.0) == pytest.approx(c.radius)


@pytest.mark.parametrize("p", PS)
@pytest.mark.parametrize("t", [0.0, 1.0, 10.0, 100.0])
def test_barenblatt_mass(p, t):
    edge = support_radius(p, 1.0, 1.3, 1 + t)
    m = 2 * quad_compact(lambda x: float(barenblatt(p, 1.0, 1.3, t, x)), 0, edge, tol=1e-12)
    assert m == pytest.approx(1.3, abs=1e-8)


@pytest.mark.parametrize("p", PS)
def test_barenblatt_solves_pme(p):
    mu, mass, t, h = 0.7, 1.0, 2.0, 1e-4
    edge = support_radius(p, mu, mass, 1 + t)
    x = np.linspace(-0.9 * edge, 0.9 * edge, 201)
    v = lambda tt, xx: barenblatt(p, mu, mass, tt, xx)
    res = (v(t + h, x) - v(t - h, x)) / (2 * h) - mu * (v(t, x + h) ** p - 2 * v(t, x) ** p + v(t, x - h) ** p) / h**2
    assert np.max(np.abs(res)) <= 1e-3


def test_barenblatt_support_and_sign():
    x = np.linspace(-10, 10, 2001)
    v = barenblatt(3.0, 1.0, 1.0, 5.0, x)
    R = support_radius(3.0, 1.0, 1.0, 6.0)
    assert np.all(v >= 0)
    assert np.all(v[np.abs(x) >= R] == 0)


def test_contact_wave_examples():
    pr = Params(2.0, 1.0, -1.0, 0.0)
    assert contact_wave(pr, 1.0, 0.0) == pytest.approx(-0.5, abs=1e-14)
    for p in PS:
        q = Params(p, 1.0, -1.0, 0.0)
        assert contact_wave(q, 1.0, -10.0) == -1.0
        assert contact_wave(q, 1.0, 10.0 * 2.0 ** (1 / (p + 1))) == 0.0


@pytest.mark.parametrize("p", PS)
def test_contact_wave_routes_agree(p):
    pr = Params(p, 0.8, -0.3, 0.9)
    for x in np.linspace(-4, 4, 17):
        ref = contact_wave(pr, 2.0, x, method="beta")
        assert contact_wave(pr, 2.0, x, method="quad") == pytest.approx(ref, abs=1e-11)
        assert contact_wave(pr, 2.0, x, method="direct") == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("p", PS)
def test_contact_wave_is_antiderivative(p):
    pr = Params(p, 1.0, -0.5, 0.5)
    t, h = 3.0, 1e-5
    R = support_radius(p, 1.0, 1.0, t)
    x = np.linspace(-1.5 * R, 1.5 * R, 301)
    x = x[np.abs(np.abs(x) - R) > 0.02 * R]
    fd = (contact_wave(pr, t, x + h) - contact_wave(pr, t, x - h)) / (2 * h)
    assert np.max(np.abs(fd - contact_wave_dx(pr, t, x))) <= 1e-6
    assert np.allclose(contact_wave_dx(pr, t, x), barenblatt(p, 1.0, 1.0, t, x, time_offset=0.0))


@pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
def test_contact_wave_dxx_matches_fd(p):
    pr = Params(p, 1.0, -0.5, 0.5)
    t, h = 3.0, 1e-6
    R = support_radius(p, 1.0, 1.0, t)
    x = np.linspace(-0.9 * R, 0.9 * R, 101)
    fd = (contact_wave_dx(pr, t, x + h) - contact_wave_dx(pr, t, x - h)) / (2 * h)
    assert np.max(np.abs(fd - contact_wave_dxx(pr, t, x))) <= 1e-6


def test_contact_wave_dxx_free_boundary_warning():
    pr = Params(3.0, 1.0, -0.5, 0.5)
    R = support_radius(3.0, 1.0, 1.0, 2.0)
    with pytest.warns(DegenerateSecondDerivative):
        v = contact_wave_dxx(pr, 2.0, np.array([R]))
    assert np.isinf(v[0])


@given(st.sampled_from(PS), st.floats(min_value=0.1, max_value=100),
       st.lists(st.floats(min_value=-50, max_value=50), min_size=2, max_size=30))
def test_contact_wave_monotone_and_bounded(p, t, xs):
    pr = Params(p, 1.0, -0.7, 0.4)
    x = np.sort(np.asarray(xs))
    u = contact_wave(pr, t, x)
    assert np.all(np.diff(u) >= -1e-15)
    assert np.all((u >= -0.7) & (u <= 0.4))


@pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
@pytest.mark.parametrize("q", (1.0, 2.0, 4.0))
def test_contact_dx_norm_scaling(p, q):
    vals = [contact_dx_norm(p, 1.0, 1.0, t, q) * t ** ((q - 1) / ((p + 1) * q)) for t in (1, 4, 16, 64)]
    assert max(vals) / min(vals) - 1 <= 5e-3


@pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
def test_contact_linf_is_peak(p):
    c = selfsimilar_constants(p, 1.0, 1.0)
    for t in (1.0, 8.0):
        assert contact_dx_norm(p, 1.0, 1.0, t, math.inf) == pytest.approx(
            c.A ** (1 / (p - 1)) * t ** (-1 / (p + 1)), rel=1e-14)


@pytest.mark.parametrize("p,q", [(1.5, 1.0), (1.5, 2.0), (2.0, 2.0), (2.0, 4.0), (3.0, 1.0), (3.0, 1.5)])
def test_contact_dxx_norm_scaling(p, q):
    vals = [contact_dxx_norm(p, 1.0, 1.0, t, q) * t ** ((2 * q - 1) / ((p + 1) * q)) for t in (1, 4, 16, 64)]
    assert max(vals) / min(vals) - 1 <= 1e-2


def test_contact_dxx_norm_matches_grid():
    p, t = 2.0, 2.0
    pr = Params(p, 1.0, -0.5, 0.5)
    R = support_radius(p, 1.0, 1.0, t)
    x = np.linspace(-R, R, 400_001)
    d = np.abs(contact_wave_dxx(pr, t, x[1:-1]))
    grid = math.sqrt(np.sum(d**2) * (x[1] - x[0]))
    assert contact_dxx_norm(p, 1.0, 1.0, t, 2.0) == pytest.approx(grid, rel=1e-3)


def test_contact_dxx_norm_inadmissible():
    with pytest.raises(InvalidParams):
        contact_dxx_norm(3.0, 1.0, 1.0, 1.0, 2.0)


@pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
def test_contact_flux_norm_scaling(p):
    vals = [contact_flux_dx_norm(p, 1.0, 1.0, t) * t ** ((2 * p + 1) / (2 * (p + 1))) for t in (1, 4, 16, 64)]
    assert max(vals) / min(vals) - 1 <= 1e-2


def test_exact_rarefaction_examples():
    assert exact_rarefaction(RED, 0, 1, 2, 1.0) == pytest.approx(0.5)
    assert exact_rarefaction(RED, 0, 1, 2, -1.0) == 0.0
    assert exact_rarefaction(RED, 0, 1, 2, 3.0) == 1.0
    with pytest.raises(OutOfBranch):
        exact_rarefaction(RED, -1, 1, 2, 0.0)


def test_smooth_rarefaction_examples():
    assert smooth_rarefaction(RED, 0, 1, 0.0, 0.0) == pytest.approx(0.5, abs=1e-15)
    x0 = -0.33742
    val = smooth_rarefaction(RED, 0, 1, 1.0, 0.0)
    assert val == pytest.approx(0.5 + 0.5 * math.tanh(x0), abs=1e-4)
    assert val == pytest.approx(0.338, abs=1e-3)


def test_smooth_rarefaction_scalar_and_array_agree():
    x = np.linspace(-5, 15, 41)
    arr = smooth_rarefaction(RED, 0.2, 1.3, 7.0, x)
    sc = [smooth_rarefaction(RED, 0.2, 1.3, 7.0, float(v)) for v in x]
    assert np.allclose(arr, sc, atol=1e-12)


def test_smooth_rarefaction_bounds_and_lemma():
    x = np.linspace(-40, 60, 200_001)
    dx = x[1] - x[0]
    d0 = smooth_rarefaction_dx(RED, 0, 1, 0.0, x)
    d10 = smooth_rarefaction_dx(RED, 0, 1, 10.0, x)
    u10 = smooth_rarefaction(RED, 0, 1, 10.0, x)
    assert np.max(d10) <= np.max(d0)
    assert np.sum(d10) * dx == pytest.approx(1.0, abs=1e-6)
    assert np.all(d10 > 0)
    inner = (x > -15) & (x < 25)
    assert np.all((u10[inner] > 0) & (u10[inner] < 1))


def test_smooth_rarefaction_dx_matches_fd():
    x = np.linspace(-5, 20, 51)
    h = 1e-6
    fd = (smooth_rarefaction(RED, 0.1, 0.8, 12.0, x + h) - smooth_rarefaction(RED, 0.1, 0.8, 12.0, x - h)) / (2 * h)
    assert np.allclose(fd, smooth_rarefaction_dx(RED, 0.1, 0.8, 12.0, x), atol=1e-7)


def test_smooth_rarefaction_sup_gap_decreases():
    gaps = []
    for t in (1.0, 10.0, 100.0, 1000.0):
        x = np.linspace(-20, t + 20, 50_001)
        gaps.append(np.max(np.abs(smooth_rarefaction(RED, 0, 1, t, x) - exact_rarefaction(RED, 0, 1, t, x))))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_multiwave_reduced_examples():
    pr = Params(2.0, 1.0, -0.5, 0.5)
    t = 4.0
    assert multiwave(pr, t, -10 * (1 + t) ** (1 / 3)) == pytest.approx(-0.5)
    T = 1e4
    assert multiwave(pr, T, 0.25 * T) == pytest.approx(0.25, abs=1e-12)
    assert multiwave_case(pr) == "contact_rarefaction"


def test_multiwave_three_wave():
    flux = make_flux("interval_degenerate", a=-1.0, b=0.0)
    pr = Params(2.0, 1.0, -2.0, 1.0, flux)
    assert multiwave_case(pr) == "rarefaction_contact_rarefaction"
    T = 1e4
    assert multiwave(pr, T, float(flux.df(1.0)) * T) == pytest.approx(1.0)
    assert multiwave(pr, T, -T) == pytest.approx(-2.0)
    x = np.linspace(-2 * T, 2 * T, 4001)
    assert np.all(np.diff(multiwave(pr, T, x)) >= -1e-14)


def test_multiwave_unsupported():
    with pytest.raises(CaseUnsupported):
        multiwave(Params(2.0, 1.0, 0.5, 1.0), 1.0, 0.0)
    with pytest.raises(CaseUnsupported):
        multiwave(Params(2.0, 1.0, -1.0, 1.0, make_flux("zero")), 1.0, 0.0)


def test_tilde_U_examples():
    pr = Params(2.0, 1.0, -0.5, 0.5)
    assert tilde_U(pr, 0.0, -1e3) == pytest.approx(-0.5)
    expect = -0.25 + 0.25
    assert tilde_U(pr, 0.0, 0.0) == pytest.approx(expect, abs=1e-14)
    for t in (0.0, 1.0, 10.0):
        x = np.linspace(-30, 30 + t, 10_000)
        assert np.all(tilde_U_dx(pr, t, x) >= 0)


def test_smoothed_multiwave_reduces_to_tilde_U():
    pr = Params(2.0, 1.0, -0.5, 0.5)
    x = np.linspace(-10, 20, 61)
    assert np.allclose(smoothed_multiwave(pr, 3.0, x), tilde_U(pr, 3.0, x), atol=1e-15)


def test_remainder_far_left_vanishes():
    pr = Params(2.0, 1.0, -0.5, 0.5)
    assert remainder_Fp(pr, 10.0, -100.0) == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("p,t", [(1.5, 5.0), (2.0, 5.0), (3.0, 5.0), (2.0, 50.0)])
def test_remainder_matches_fd_residual(p, t):
    from degenwave.verify import residual_points, tilde_residual
    pr = Params(p, 1.0, -0.5, 0.5)
    h = 1e-5 * (1 + t) ** (1 / (p + 1))
    x = residual_points(pr, t)
    assert x.size == 100
    assert np.max(np.abs(tilde_residual(pr, t, x, h) + remainder_Fp(pr, t, x))) <= 10 * h


def test_contact_point_self_consistent():
    pr = Params(2.0, 1.0, -0.5, 0.5)
    X = contact_point_X(pr, 100.0, tol=1e-8)
    assert abs(tilde_U(pr, 100.0, X)) <= 1e-7
    c = selfsimilar_constants(2.0, 1.0, 0.5)
    assert 0 < X < c.radius * 101 ** (1 / 3)
