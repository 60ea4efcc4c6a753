"""Executable oracle checks for the profiles, the remainder, the solver and the decay theorems."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import NormSeries, face_slopes, fit_power_law, fit_rate, format_float
from .core import Params, make_flux, quad_compact
from .errors import DegenwaveError
from .profiles import (barenblatt, contact_dx_norm, contact_dxx_norm, contact_flux_dx_norm, contact_point_X,
                       exact_rarefaction, remainder_Fp, selfsimilar_constants, smooth_rarefaction,
                       smooth_rarefaction_dx, support_radius, tilde_U)
from .solver import GridSpec, Perturbation, RunConfig, run

P_THRESHOLD = (7.0 + math.sqrt(73.0)) / 12.0
EPSILON = 0.02
THRESHOLD_FLAG_BAND = 0.05
ENVELOPE_FACTOR = 1.5
SLOPE_TOL = 0.1

CONSTANT_CASES = (
    (1.2, 0.5, 0.7), (1.2, 1.0, 1.0), (1.2, 2.0, 2.0),
    (2.0, 0.5, 1.0), (2.0, 1.0, 2.0), (2.0, 2.0, 0.7),
    (3.0, 0.5, 2.0), (3.0, 1.0, 0.7), (3.0, 2.0, 1.0),
)
BARENBLATT_CASES = ((2.0, 1.0, 1.0), (1.2, 0.5, 2.0), (3.0, 2.0, 0.7))


@dataclass
class CheckReport:
    name: str
    status: str
    measured: float
    expected: float
    tolerance: float
    notes: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def csv_row(self) -> str:
        notes = self.notes.replace(",", ";").replace("\n", " ")
        return ",".join([self.name, self.status, format_float(self.measured), format_float(self.expected),
                         format_float(self.tolerance), notes])


REPORT_HEADER = "name,status,measured,expected,tolerance,notes"


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    buf.write(REPORT_HEADER + "\n")
    for r in reports:
        buf.write(r.csv_row() + "\n")
    return buf.getvalue()


def _within(name, measured, expected, tol, notes=""):
    ok = abs(measured - expected) <= tol
    return CheckReport(name, "pass" if ok else "fail", float(measured), float(expected), float(tol), notes)


def _predicate(name, ok, measured, expected, tol, notes=""):
    return CheckReport(name, "pass" if ok else "fail", float(measured), float(expected), float(tol), notes)


# --------------------------------------------------------------------------
# theorem exponents


def thm31_exponent(p: float, q: float) -> float:
    """Decay of ||phi||_{L^q}, q >= 2, without L^1 data."""
    return (1.0 / (3 * p + 1)) * (1.0 - 2.0 / q)


def thm32_exponent(p: float, q: float) -> tuple[float, bool]:
    """Decay of ||phi||_{L^q} with L^1 data; the flag marks an epsilon-type bound (q = inf)."""
    if math.isinf(q):
        return 1.0 / (2 * p), True
    return (1.0 / (2 * p)) * (1.0 - 1.0 / q), False


def derivative_exponent(p: float) -> tuple[float, bool]:
    """Decay of ||d/dx u||_{L^{p+1}}."""
    if p < P_THRESHOLD:
        return p / (p + 1) ** 2, False
    return 3.0 / (2 * (p + 1) * (3 * p - 2)), True


def thm33_exponent(p: float, r: float) -> tuple[float, bool, int]:
    """Decay of ||d/dx u||_{L^{r+1}} for r > p: (exponent, epsilon-type, case number)."""
    if not r > p:
        raise ValueError(f"higher-derivative bound needs r > p, got r={r}, p={p}")
    if p >= P_THRESHOLD:
        return (p + 2 * r) / (2 * p * (3 * p - 2) * (r + 1)), True, 3
    r_star = (-4 * p * p + 7 * p + 3) / (2 * p)
    if r > r_star:
        return (4 * p * (r - p) + 7 * p + 3) / (6 * p * (p + 1) * (r + 1)), False, 1
    return r / ((p + 1) * (r + 1)), True, 2


def near_threshold(p: float) -> bool:
    return abs(p - P_THRESHOLD) < THRESHOLD_FLAG_BAND


# --------------------------------------------------------------------------
# closed-form checks


def check_constants_identity(p: float, mu: float, mass: float) -> CheckReport:
    c = selfsimilar_constants(p, mu, mass)
    lhs = 2.0 * c.A ** ((p + 1) / (2 * (p - 1))) * c.B ** -0.5 * c.I_p
    return _within(f"constants_identity[p={p:g},mu={mu:g},mass={mass:g}]", lhs, mass, 1e-9 * mass)


def barenblatt_mass(p: float, mu: float, mass: float, t: float) -> float:
    edge = support_radius(p, mu, mass, 1.0 + t)
    g = lambda x: float(barenblatt(p, mu, mass, t, x))
    return 2.0 * quad_compact(g, 0.0, edge, tol=1e-12)


def pme_residual(p: float, mu: float, mass: float, t: float, x, h: float = 1e-4) -> np.ndarray:
    """Centred-difference residual of dv/dt = mu d2/dx2 (v^p) for the Barenblatt profile."""
    x = np.asarray(x, dtype=float)
    v = lambda tt, xx: barenblatt(p, mu, mass, tt, xx)
    dt = (v(t + h, x) - v(t - h, x)) / (2 * h)
    w = lambda xx: v(t, xx) ** p
    dxx = (w(x + h) - 2 * w(x) + w(x - h)) / (h * h)
    return dt - mu * dxx


def check_barenblatt(p: float, mu: float, mass: float) -> CheckReport:
    mass_err = max(abs(barenblatt_mass(p, mu, mass, t) - mass) for t in (0.0, 1.0, 10.0, 100.0))
    res = 0.0
    for t in (1.0, 10.0):
        edge = support_radius(p, mu, mass, 1.0 + t)
        x = np.linspace(-0.9 * edge, 0.9 * edge, 101)
        res = max(res, float(np.max(np.abs(pme_residual(p, mu, mass, t, x)))))
    ok = mass_err <= 1e-8 and res <= 1e-3
    return _predicate(f"barenblatt[p={p:g},mu={mu:g},mass={mass:g}]", ok, mass_err, 0.0, 1e-8,
                      f"max interior PME residual {res:.3e} (limit 1e-3)")


def barenblatt_solver_errors(ns=(512, 1024, 2048), t: float = 3.0) -> list[float]:
    """L^1 error of the zero-flux solver's face slopes against the Barenblatt profile at time t.

    The solver integrates the antiderivative (contact wave with time shift 1),
    so its difference quotients evolve the Barenblatt density itself.
    """
    params = Params(2.0, 1.0, -0.5, 0.5, make_flux("zero"))
    errs = []
    for n in ns:
        cfg = RunConfig(params, GridSpec(-6.0, 6.0, n), t, record_every=t, snapshot_times=(t,))
        _, snaps = run(cfg)
        u = snaps[t].u
        xf = u.x_min + u.dx * np.arange(1, n)
        exact = barenblatt(params.p, params.mu, params.jump, t, xf)
        errs.append(float(np.sum(np.abs(face_slopes(u) - exact)) * u.dx))
    return errs


def check_solver_convergence(ns=(512, 1024, 2048)) -> CheckReport:
    errs = barenblatt_solver_errors(ns)
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    order = min(orders)
    return _predicate("barenblatt_solver_order", order >= 0.8, order, 0.8, 0.0,
                      "L1 errors " + " ".join(f"{e:.3e}" for e in errs))


def admissible_dxx_qs(p: float) -> tuple[float, ...]:
    if p > 2:
        q_max = (p - 1) / (p - 2)
        return tuple(q for q in (1.0, 1.5, 2.0, 4.0) if q < q_max)
    return (1.0, 2.0, 4.0)


def contact_norm_slopes(p: float, mu: float = 1.0, mass: float = 1.0, times=None) -> list[tuple[str, float, float]]:
    """(label, fitted slope, theorem slope) for the three norm families of the contact wave."""
    if times is None:
        times = np.geomspace(1.0, 1e3, 10)
    out = []
    for q in (1.0, 2.0, 4.0, math.inf):
        vals = [contact_dx_norm(p, mu, mass, t, q) for t in times]
        expected = -1.0 / (p + 1) if math.isinf(q) else -(q - 1) / ((p + 1) * q)
        out.append((f"dx_L{q:g}", _loglog_slope(times, vals), expected))
    for q in admissible_dxx_qs(p):
        vals = [contact_dxx_norm(p, mu, mass, t, q) for t in times]
        out.append((f"dxx_L{q:g}", _loglog_slope(times, vals), -(2 * q - 1) / ((p + 1) * q)))
    vals = [contact_flux_dx_norm(p, mu, mass, t) for t in times]
    out.append(("dx_flux_L2", _loglog_slope(times, vals), -(2 * p + 1) / (2 * (p + 1))))
    return out


def _loglog_slope(times, vals) -> float:
    if all(v == vals[0] for v in vals):
        return 0.0
    return fit_power_law(times, vals, offset=0.0, min_samples=2).exponent


def check_contact_norm_scaling(p: float) -> CheckReport:
    rows = contact_norm_slopes(p)
    worst = max(abs(s - e) for _, s, e in rows)
    notes = " ".join(f"{lab}:{s:.5f}/{e:.5f}" for lab, s, e in rows)
    return _within(f"contact_norm_scaling[p={p:g}]", worst, 0.0, 0.01, notes)


def _rarefaction_grid(t: float, pad: float = 30.0, density: float = 50.0):
    lo, hi = -pad, t + pad
    n = int((hi - lo) * density) + 1
    return np.linspace(lo, hi, n)


def check_smooth_rarefaction() -> CheckReport:
    flux = make_flux("reduced_quadratic")
    times = (1.0, 10.0, 100.0, 1000.0)
    worst = 1.0
    notes = []
    for q in (1.0, 2.0, math.inf):
        scaled = []
        for t in times:
            x = _rarefaction_grid(t)
            d = smooth_rarefaction_dx(flux, 0.0, 1.0, t, x)
            dx = x[1] - x[0]
            norm = float(np.max(np.abs(d))) if math.isinf(q) else float(np.sum(np.abs(d) ** q) * dx) ** (1 / q)
            factor = (1 + t) ** (1.0 if math.isinf(q) else 1.0 - 1.0 / q)
            scaled.append(norm * factor)
        ratio = max(scaled) / min(scaled)
        worst = max(worst, ratio)
        notes.append(f"q={q:g}:ratio={ratio:.4f}")
    gaps = []
    for t in (10.0, 1000.0):
        x = _rarefaction_grid(t)
        gaps.append(float(np.max(np.abs(smooth_rarefaction(flux, 0.0, 1.0, t, x)
                                        - exact_rarefaction(flux, 0.0, 1.0, t, x)))))
    notes.append(f"sup_gap t=10:{gaps[0]:.3e} t=1000:{gaps[1]:.3e}")
    ok = worst <= 3.0 and gaps[1] < gaps[0]
    return _predicate("smooth_rarefaction", ok, worst, 1.0, 2.0, " ".join(notes))


def residual_points(params: Params, t: float, n: int = 100) -> np.ndarray:
    """Sample points away from the free boundary of the contact wave."""
    c = selfsimilar_constants(params.p, params.mu, -params.u_minus)
    R = c.radius * (1.0 + t) ** (1.0 / (params.p + 1))
    right = float(params.flux.df(params.u_plus)) * t + 5.0
    x = np.linspace(-1.5 * R, right, 4 * n)
    x = x[(np.abs(np.abs(x) - R) > 0.05 * R)]
    idx = np.linspace(0, x.size - 1, n).round().astype(int)
    return x[idx]


def tilde_residual(params: Params, t: float, x, h: float) -> np.ndarray:
    """Finite-difference residual of the equation applied to tilde_U."""
    p, mu, flux = params.p, params.mu, params.flux
    U = lambda tt, xx: tilde_U(params, tt, xx)
    dt = (U(t + h, x) - U(t - h, x)) / (2 * h)
    dfx = (flux.f(U(t, x + h)) - flux.f(U(t, x - h))) / (2 * h)
    u0, up, um = U(t, x), U(t, x + h), U(t, x - h)
    sp, sm = (up - u0) / h, (u0 - um) / h
    D = lambda s: np.abs(s) ** (p - 1) * s
    visc = mu * (D(sp) - D(sm)) / h
    return dt + dfx - visc


def check_tildeU_residual(cases=((2.0, 5.0), (1.5, 50.0), (3.0, 5.0))) -> CheckReport:
    worst_ratio = 0.0
    notes = []
    for p, t in cases:
        params = Params(p, 1.0, -0.5, 0.5)
        h = 1e-5 * (1.0 + t) ** (1.0 / (p + 1))
        x = residual_points(params, t)
        mismatch = float(np.max(np.abs(tilde_residual(params, t, x, h) + remainder_Fp(params, t, x))))
        worst_ratio = max(worst_ratio, mismatch / (10 * h))
        notes.append(f"p={p:g},t={t:g}:{mismatch:.3e}/{10 * h:.3e}")
    return _predicate("tildeU_residual", worst_ratio <= 1.0, worst_ratio, 0.0, 1.0, " ".join(notes))


def check_contact_point(ps=(1.5, 2.0, 3.0)) -> CheckReport:
    times = np.geomspace(10.0, 1e4, 13)
    worst_margin = -math.inf
    bracket_ok = True
    notes = []
    for p in ps:
        params = Params(p, 1.0, -0.5, 0.5)
        c = selfsimilar_constants(p, 1.0, 0.5)
        scale = (1.0 + times) ** (1.0 / (p + 1))
        X = np.array([contact_point_X(params, t) for t in times])
        bracket_ok &= bool(np.all((X > 0) & (X < c.radius * scale)))
        gap = np.abs(c.radius - X / scale)
        late = times >= 100.0
        slope = fit_power_law(times[late], gap[late], offset=1.0, min_samples=3).exponent
        bound = -(p - 1) / (p + 1) + 0.1
        worst_margin = max(worst_margin, slope - bound)
        notes.append(f"p={p:g}:slope={slope:.4f}<= {bound:.4f}")
    ok = bracket_ok and worst_margin <= 0.0
    return _predicate("contact_point", ok, worst_margin, 0.0, 0.0,
                      ("bracket ok " if bracket_ok else "bracket violated ") + " ".join(notes))


# --------------------------------------------------------------------------
# decay suite


@dataclass(frozen=True)
class DecayCheck:
    column: str
    exponent: float
    slope_tol: float = SLOPE_TOL
    label: str = ""


@dataclass(frozen=True)
class DecayRun:
    name: str
    config: RunConfig
    window: tuple[float, float]
    checks: tuple[DecayCheck, ...] = field(default_factory=tuple)


def canonical_config(p: float = 2.0, n: int = 4096, x_min: float = -20.0, x_max: float = 140.0,
                     t_end: float = 200.0, record_every: float = 1.0) -> RunConfig:
    params = Params(p, 1.0, -0.5, 0.5, make_flux("reduced_quadratic"))
    return RunConfig(params, GridSpec(x_min, x_max, n), t_end,
                     perturbation=Perturbation("gaussian", 0.1, 0.0, 1.0), record_every=record_every, r=3.0)


def default_checks(p: float, r: float | None = 3.0) -> tuple[DecayCheck, ...]:
    checks = [DecayCheck("l2", thm32_exponent(p, 2.0)[0], label="thm3.2 q=2")]
    e4, _ = thm32_exponent(p, 4.0)
    checks.append(DecayCheck("l4", e4, label="thm3.2 q=4"))
    einf, _ = thm32_exponent(p, math.inf)
    checks.append(DecayCheck("linf", einf - EPSILON, label="thm3.2 q=inf"))
    ed, _ = derivative_exponent(p)
    checks.append(DecayCheck("dxu_lp1", ed, SLOPE_TOL if p >= P_THRESHOLD else SLOPE_TOL + EPSILON,
                             label="derivative L^{p+1}"))
    if r is not None and r > p:
        e3, _, case = thm33_exponent(p, r)
        checks.append(DecayCheck("dxu_lr1", e3, label=f"thm3.3 case {case} r={r:g}"))
    return tuple(checks)


def canonical_runs() -> tuple[DecayRun, ...]:
    main = canonical_config()
    low = canonical_config(p=1.2, x_min=-60.0, x_max=140.0)
    low_checks = (DecayCheck("dxu_lp1", derivative_exponent(1.2)[0], SLOPE_TOL + EPSILON,
                             label="derivative L^{p+1}"),)
    return (DecayRun("canonical_p2", main, (20.0, 200.0), default_checks(2.0)),
            DecayRun("canonical_p1.2", low, (20.0, 200.0), low_checks))


def envelope_ratio(series: NormSeries, column: str, exponent: float, window: tuple[float, float]) -> float:
    t = np.asarray(series.times)
    v = series.column(column)
    i1 = int(np.argmin(np.abs(t - window[0])))
    i2 = int(np.argmin(np.abs(t - window[1])))
    env = v * (1.0 + t) ** exponent
    return float(env[i2] / env[i1])


def decay_reports(name: str, series: NormSeries, p: float, window, checks) -> list[CheckReport]:
    out = []
    flag = " near-threshold: flagged" if near_threshold(p) else ""
    for chk in checks:
        tag = f"{name}:{chk.column}"
        try:
            fit = fit_rate(series, chk.column, window)
            ratio = envelope_ratio(series, chk.column, chk.exponent, window)
        except DegenwaveError as exc:
            out.append(CheckReport(tag, "fail", math.nan, -chk.exponent, chk.slope_tol, str(exc)))
            continue
        out.append(_predicate(tag + ":envelope", ratio <= ENVELOPE_FACTOR, ratio, ENVELOPE_FACTOR, 0.0,
                              f"{chk.label} exponent {chk.exponent:.6f}{flag}"))
        bound = -chk.exponent + chk.slope_tol
        out.append(_predicate(tag + ":slope", fit.exponent <= bound, fit.exponent, -chk.exponent, chk.slope_tol,
                              f"{chk.label} r2={fit.r2:.4f}{flag}"))
    return out


def run_decay_suite(configs=None) -> list[CheckReport]:
    reports = []
    for dr in configs or canonical_runs():
        series, _ = run(dr.config)
        if series.status != "ok":
            reports.append(CheckReport(dr.name, "fail", math.nan, math.nan, math.nan, series.message))
            continue
        reports.extend(decay_reports(dr.name, series, dr.config.params.p, dr.window, dr.checks))
    return reports


# --------------------------------------------------------------------------
# suites


def quick_suite() -> list[CheckReport]:
    reports = [check_constants_identity(*c) for c in CONSTANT_CASES]
    reports += [check_barenblatt(*c) for c in BARENBLATT_CASES]
    reports.append(check_solver_convergence())
    reports += [check_contact_norm_scaling(p) for p in (1.5, 2.0, 3.0)]
    reports.append(check_smooth_rarefaction())
    reports.append(check_tildeU_residual())
    reports.append(check_contact_point())
    return reports


def full_suite() -> list[CheckReport]:
    return quick_suite() + run_decay_suite()


def summary(reports) -> str:
    n_pass = sum(r.passed for r in reports)
    lines = [f"{r.status.upper():5s} {r.name}  measured={r.measured:.6g} expected={r.expected:.6g}" for r in reports]
    lines.append(f"{n_pass}/{len(reports)} checks passed")
    return "\n".join(lines)
