import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from degenwave.analysis import (NORM_COLUMNS, NormSeries, deriv_lq_norm, fit_power_law, fit_rate, gq_diagnostic,
                                gq_regions, interp_scaling_check, linf_norm, lq_norm, perturbation,
                                reference_state)
from degenwave.core import GridFunction, Params
from degenwave.errors import DegenerateRatio, InsufficientData, InvalidParams, InvalidQ, NonPositiveValues
from degenwave.solver import Perturbation
from degenwave.profiles import contact_dx_norm, contact_wave, tilde_U, tilde_U_dx

PARAMS = Params(2.0, 1.0, -0.5, 0.5)


def const(c, n=100):
    return GridFunction(0.0, 1.0, n, np.full(n, c))


def test_constant_norms():
    for n in (10, 100, 1000):
        assert lq_norm(const(2.0, n), 1) == pytest.approx(2.0)
        assert linf_norm(const(2.0, n)) == 2.0
        assert deriv_lq_norm(const(2.0, n), 3) == 0.0


def test_gaussian_l2():
    a, w = 0.3, 1.5
    gf = GridFunction.sample(lambda x: a * np.exp(-(x / w) ** 2), -20 * w, 20 * w, 2000)
    assert gf.dx == pytest.approx(w / 50)
    assert lq_norm(gf, 2) ** 2 == pytest.approx(a * a * w * math.sqrt(math.pi / 2), rel=1e-3)


@pytest.mark.parametrize("q", [1.0, 2.0, 3.5])
def test_ramp_derivative_norm(q):
    gf = GridFunction.sample(lambda x: -1.7 * x, 0.0, 1.0, 500)
    assert deriv_lq_norm(gf, q) == pytest.approx(1.7 * (499 / 500) ** (1 / q), rel=1e-12)


def test_bad_q():
    for q in (0.5, math.inf, math.nan):
        with pytest.raises(InvalidQ):
            lq_norm(const(1.0), q)
        with pytest.raises(InvalidQ):
            deriv_lq_norm(const(1.0), q)


def test_contact_derivative_norm_matches_quadrature():
    pr = Params(2.0, 1.0, -0.5, 0.5)
    gf = GridFunction.sample(lambda x: contact_wave(pr, 5.0, x), -10, 10, 4096)
    assert deriv_lq_norm(gf, 3) == pytest.approx(contact_dx_norm(2.0, 1.0, 1.0, 5.0, 3), rel=1e-2)


def test_perturbation_recovery():
    gf = GridFunction.sample(lambda x: tilde_U(PARAMS, 2.0, x), -20, 40, 600)
    assert np.max(np.abs(perturbation(gf, PARAMS, 2.0).values)) <= 1e-15
    bump = lambda x: 0.1 * np.exp(-x * x)
    gf2 = GridFunction.sample(lambda x: tilde_U(PARAMS, 2.0, x) + bump(x), -20, 40, 600)
    assert np.max(np.abs(perturbation(gf2, PARAMS, 2.0).values - bump(gf2.x))) <= 1e-12


def test_references_converge():
    diffs = []
    for t in (10.0, 100.0, 1000.0):
        x = np.linspace(-60, t + 60, 40_001)
        dx = x[1] - x[0]
        d = reference_state(PARAMS, t, x, "tildeU") - reference_state(PARAMS, t, x, "multiwave")
        diffs.append(math.sqrt(np.sum(d * d) * dx))
    assert diffs[0] > diffs[1] > diffs[2]
    with pytest.raises(InvalidParams):
        reference_state(PARAMS, 1.0, 0.0, "bogus")


def test_norm_series_csv_roundtrip():
    s = NormSeries()
    for k in range(5):
        s.append(0.5 * k, {c: 1.0 / (k + 1) + i for i, c in enumerate(NORM_COLUMNS) if c != "dxu_lr1"})
    text = s.to_csv()
    assert text.splitlines()[0] == "t," + ",".join(NORM_COLUMNS)
    back = NormSeries.from_csv(text)
    assert back.times == s.times
    for c in NORM_COLUMNS:
        assert np.array_equal(back.column(c), s.column(c), equal_nan=True)
    assert back.to_csv() == text
    s.status, s.message = "failed", "boom at t=2"
    failed = NormSeries.from_csv(s.to_csv())
    assert failed.status == "failed" and failed.message == "boom at t=2"
    with pytest.raises(InvalidParams):
        s.append(1.0, {})


def test_fit_exact_power_laws():
    t = np.linspace(0, 100, 50)
    f = fit_power_law(t, (1 + t) ** -0.5)
    assert f.exponent == pytest.approx(-0.5, abs=1e-10) and f.r2 == pytest.approx(1.0)
    f = fit_power_law(t, 3 * (1 + t) ** -0.125)
    assert f.exponent == pytest.approx(-0.125, abs=1e-10)
    assert f.intercept == pytest.approx(math.log(3), abs=1e-10)


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=0.01, max_value=100))
def test_fit_recovers_exponent(k, c):
    t = np.geomspace(1, 1000, 20)
    f = fit_power_law(t, c * (1 + t) ** k)
    assert f.exponent == pytest.approx(k, abs=1e-10)
    assert 0.0 <= f.r2 <= 1.0


def test_fit_errors():
    with pytest.raises(InsufficientData):
        fit_power_law([1, 2, 3], [1, 2, 3])
    with pytest.raises(NonPositiveValues):
        fit_power_law(np.arange(10), np.r_[np.ones(9), 0.0])


def test_fit_rate_window():
    s = NormSeries()
    for t in range(0, 101):
        s.append(float(t), {"l2": (1 + t) ** -0.25 if t >= 20 else 5.0})
    f = fit_rate(s, "l2", (20, 100))
    assert f.exponent == pytest.approx(-0.25, abs=1e-10)
    assert f.window == (20.0, 100.0) and f.n == 81


def test_gq_zero_and_region_collapse():
    x = np.linspace(-20, 40, 512)
    gf = GridFunction(-20, 40, 512, np.zeros(512))
    assert gq_diagnostic(gf, PARAMS, 3.0) == 0.0
    phi = GridFunction.sample(Perturbation("bump", 0.05, 15.0, 3.0), -20, 40, 512)
    U = tilde_U(PARAMS, 3.0, phi.x)
    assert np.all(U[phi.values > 0] >= 0) and np.all(phi.values >= 0)
    expected = np.sum(phi.values**2 * tilde_U_dx(PARAMS, 3.0, phi.x)) * phi.dx
    assert gq_diagnostic(phi, PARAMS, 3.0) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(InvalidQ):
        gq_diagnostic(gf, PARAMS, 3.0, q=1.5)


@given(arrays(np.float64, 64, elements=st.floats(-1, 1)), arrays(np.float64, 64, elements=st.floats(-1, 1)),
       arrays(np.float64, 64, elements=st.floats(0, 5)), st.sampled_from([2.0, 2.5, 4.0]))
def test_gq_regions_nonnegative(phi, U, dU, q):
    for part in gq_regions(phi, U, dU, q).values():
        assert np.all(part >= -1e-15)


def _smooth_phi(seed, n=2048, L=20.0):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-5, 5, 4)
    amps = rng.normal(size=4)
    widths = rng.uniform(0.5, 2.0, 4)
    f = lambda x: sum(a * np.exp(-((x - c) / w) ** 2) for a, c, w in zip(amps, centers, widths))
    return f


@pytest.mark.parametrize("p,q", [(2.0, 2.0), (1.5, 4.0), (3.0, 3.0)])
def test_interp_ratio_scale_invariance(p, q):
    f = _smooth_phi(7)
    base = GridFunction.sample(f, -30, 30, 8192)
    amp = base.with_values(2 * base.values)
    dil = GridFunction.sample(lambda x: f(3 * x), -10, 10, 8192)
    R = interp_scaling_check(base, p, q)
    assert interp_scaling_check(amp, p, q) == pytest.approx(R, rel=1e-12)
    assert interp_scaling_check(dil, p, q) == pytest.approx(R, rel=1e-2)


def test_interp_ratio_bounded_over_random_states():
    ratios = [interp_scaling_check(GridFunction.sample(_smooth_phi(s), -30, 30, 2048), 2.0, 2.0) for s in range(50)]
    assert max(ratios) < 10 * np.median(ratios)
    with pytest.raises(DegenerateRatio):
        interp_scaling_check(GridFunction(0, 1, 8, np.zeros(8)), 2.0, 2.0)
