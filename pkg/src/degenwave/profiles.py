"""Closed-form wave profiles.

The building blocks are

* the Barenblatt source solution of the porous medium equation
  v_t = mu (|v|^(p-1) v)_xx,
* the p-Laplacian contact wave, i.e. the spatial antiderivative of the
  Barenblatt profile, connecting two states through a self-similar layer
  of width ~ t^(1/(p+1)),
* the exact centred rarefaction fan and its tanh-smoothed approximation
  obtained by tracing characteristics of Burgers' equation,
* the composite multiwave pattern and the approximate asymptotic state
  ``tilde_U`` used for the reduced problem (flux flat on u < 0).

All profile functions accept scalars or numpy arrays for ``x``.
"""
from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy.special import betainc, expit

from .core import (
    FluxModel,
    Params,
    SelfSimilarConstants,
    bisect_increasing,
    find_root_monotone,
    lambda_inverse,
    lambda_inverse_array,
    quad_compact,
)
from .errors import CaseUnsupported, DegenerateSecondDerivative, InvalidParams, NoBracket, OutOfBranch

QUAD_TOL = 1e-13


# --------------------------------------------------------------------------
# self-similar constants and the Barenblatt profile


@lru_cache(maxsize=256)
def selfsimilar_constants(p: float, mu: float, mass: float) -> SelfSimilarConstants:
    """Amplitude A, spreading B and angular integral I_p for a contact of size ``mass``.

    A is fixed by requiring the Barenblatt profile to carry exactly ``mass``:
    2 A^((p+1)/(2(p-1))) B^(-1/2) I_p = mass.
    """
    if not (p > 1 and mu > 0 and mass > 0) or not all(map(math.isfinite, (p, mu, mass))):
        raise InvalidParams(f"need p > 1, mu > 0, mass > 0; got p={p}, mu={mu}, mass={mass}")
    B = (p - 1) / (2 * mu * p * (p + 1))
    k = (p + 1) / (p - 1)
    I_p = quad_compact(lambda th: math.sin(th) ** k, 0.0, 0.5 * math.pi, tol=QUAD_TOL)
    A = (mass**2 * (p - 1) / (8 * mu * p * (p + 1) * I_p**2)) ** ((p - 1) / (p + 1))
    return SelfSimilarConstants(A=A, B=B, I_p=I_p, mass=mass, p=p, mu=mu)


def _density(c: SelfSimilarConstants, tau: float, x):
    """tau^(-1/(p+1)) ((A - B xi^2) v 0)^(1/(p-1)), xi = x / tau^(1/(p+1))."""
    p = c.p
    scale = tau ** (1.0 / (p + 1))
    xi = np.asarray(x, dtype=float) / scale
    core = np.maximum(c.A - c.B * xi * xi, 0.0)
    return core ** (1.0 / (p - 1)) / scale


def _check_tau(tau: float):
    if not (math.isfinite(tau) and tau > 0):
        raise InvalidParams(f"effective time must be positive, got {tau}")


def barenblatt(p: float, mu: float, mass: float, t: float, x, time_offset: float = 1.0):
    """Barenblatt solution; the default offset puts the source at t = -1."""
    tau = t + time_offset
    _check_tau(tau)
    return _density(selfsimilar_constants(p, mu, mass), tau, x)


def support_radius(p: float, mu: float, mass: float, tau: float) -> float:
    return selfsimilar_constants(p, mu, mass).radius * tau ** (1.0 / (p + 1))


# --------------------------------------------------------------------------
# contact wave


def _contact_beta(c: SelfSimilarConstants, u_left: float, u_right: float, tau: float, x) -> np.ndarray:
    # substituting xi = R (2w - 1) turns the profile integral into a
    # regularised incomplete beta function with both parameters p/(p-1)
    alpha = c.p / (c.p - 1)
    xi = np.asarray(x, dtype=float) / tau ** (1.0 / (c.p + 1))
    z = np.clip(xi / c.radius, -1.0, 1.0)
    left_tail = betainc(alpha, alpha, 0.5 * (1.0 + z))
    right_tail = betainc(alpha, alpha, 0.5 * (1.0 - z))
    # evaluate from the nearer far field to keep the tails accurate
    return np.where(z <= 0.0, u_left + c.mass * left_tail, u_right - c.mass * right_tail)


def _contact_quad_scalar(c: SelfSimilarConstants, u_left: float, u_right: float, tau: float, x: float) -> float:
    # xi = R sin(theta) removes the free-boundary kink
    xi = x / tau ** (1.0 / (c.p + 1))
    z = min(max(xi / c.radius, -1.0), 1.0)
    theta = math.asin(z)
    k = (c.p + 1) / (c.p - 1)
    amp = c.A ** (1.0 / (c.p - 1)) * c.radius
    if theta <= 0.0:
        part = quad_compact(lambda th: math.cos(th) ** k, -0.5 * math.pi, theta, tol=QUAD_TOL)
        return u_left + amp * part
    part = quad_compact(lambda th: math.cos(th) ** k, theta, 0.5 * math.pi, tol=QUAD_TOL)
    return u_right - amp * part


def _contact_direct_scalar(c: SelfSimilarConstants, u_left: float, u_right: float, tau: float, x: float) -> float:
    xi = x / tau ** (1.0 / (c.p + 1))
    R = c.radius
    g = lambda s: max(c.A - c.B * s * s, 0.0) ** (1.0 / (c.p - 1))
    if xi >= R:
        return u_right
    return u_left + quad_compact(g, -R, max(xi, -R), tol=QUAD_TOL)


def _contact_constants(params: Params) -> SelfSimilarConstants:
    return selfsimilar_constants(params.p, params.mu, params.jump)


def contact_wave(params: Params, t: float, x, time_offset: float = 0.0, method: str = "beta"):
    """Contact wave from ``params.u_minus`` to ``params.u_plus`` at effective time t + time_offset.

    ``method`` picks the evaluation route: ``beta`` (incomplete beta
    function, vectorised), ``quad`` (adaptive Simpson in the angle variable)
    or ``direct`` (adaptive Simpson on the profile itself).
    """
    tau = t + time_offset
    _check_tau(tau)
    c = _contact_constants(params)
    if method == "beta":
        out = _contact_beta(c, params.u_minus, params.u_plus, tau, x)
    elif method in ("quad", "direct"):
        fn = _contact_quad_scalar if method == "quad" else _contact_direct_scalar
        xs = np.asarray(x, dtype=float)
        vals = [fn(c, params.u_minus, params.u_plus, tau, float(v)) for v in xs.ravel()]
        out = np.array(vals).reshape(xs.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    return out[()] if np.ndim(out) == 0 else out


def contact_wave_dx(params: Params, t: float, x, time_offset: float = 0.0):
    """First x-derivative of the contact wave: the Barenblatt profile."""
    tau = t + time_offset
    _check_tau(tau)
    out = _density(_contact_constants(params), tau, x)
    return out[()] if np.ndim(out) == 0 else out


def contact_wave_dxx(params: Params, t: float, x, time_offset: float = 0.0):
    """Second x-derivative; infinite at the free boundary when p > 2 (warned, not raised)."""
    tau = t + time_offset
    _check_tau(tau)
    c = _contact_constants(params)
    p = c.p
    scale = tau ** (1.0 / (p + 1))
    xi = np.asarray(x, dtype=float) / scale
    core = c.A - c.B * xi * xi
    inside = core > 0.0
    expo = (2.0 - p) / (p - 1)
    safe = np.where(inside, core, 1.0)
    out = np.where(inside, safe**expo * (-2.0 * c.B * xi) / (p - 1), 0.0) / scale**2
    edge = core == 0.0
    if np.any(edge):
        if p > 2:
            warnings.warn("contact-wave second derivative is unbounded at the free boundary",
                          DegenerateSecondDerivative, stacklevel=2)
            out = np.where(edge, -np.sign(xi) * np.inf, out)
        elif p == 2:
            out = np.where(edge, -2.0 * c.B * xi / scale**2, out)
    return out[()] if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# norms of the contact wave derivatives (self-similar scaling laws)


def contact_dx_norm(p: float, mu: float, mass: float, t: float, q: float) -> float:
    """L^q norm in x of the Barenblatt profile (= d/dx of the contact wave) at time t."""
    c = selfsimilar_constants(p, mu, mass)
    if math.isinf(q):
        return float(_density(c, t, 0.0))
    edge = c.radius * t ** (1.0 / (p + 1))
    g = lambda x: float(_density(c, t, x)) ** q
    return (2.0 * quad_compact(g, 0.0, edge, tol=1e-12)) ** (1.0 / q)


def contact_dxx_norm(p: float, mu: float, mass: float, t: float, q: float) -> float:
    """L^q norm of the second x-derivative, integrated in the angle variable.

    With x = X sin(theta), X the support radius, the integrand behaves like
    cos(theta)^e near theta = pi/2 with e = 2q(2-p)/(p-1) + 1.  When e < 0
    the substitution theta = pi/2 - s^m, m = 2/(e+1), makes it bounded.
    """
    if p > 2 and not q < (p - 1) / (p - 2):
        raise InvalidParams(f"L^{q} norm of the second derivative diverges for p={p}")
    c = selfsimilar_constants(p, mu, mass)
    scale = t ** (1.0 / (p + 1))
    X = c.radius * scale
    if math.isinf(q):
        if p > 2:
            raise InvalidParams("sup norm of the second derivative is infinite for p > 2")
        xs = np.linspace(0.0, X, 20001)[:-1]
        return float(np.max(np.abs(contact_wave_dxx(Params(p, mu, 0.0, mass), t, xs))))
    expo = (2.0 - p) / (p - 1)
    pref = (2.0 * c.B * c.radius / (p - 1) / scale**2) * c.A**expo

    def integrand_theta(sin_th, cos_th):
        # |v_xx|^q dx / dtheta
        cos_th = abs(cos_th)
        return (pref * cos_th ** (2 * expo) * abs(sin_th)) ** q * X * cos_th

    e = 2 * q * expo + 1
    if e >= 0:
        val = quad_compact(lambda th: integrand_theta(math.sin(th), math.cos(th)), 0.0, 0.5 * math.pi, tol=1e-13)
    else:
        m = 2.0 / (e + 1)
        top = (0.5 * math.pi) ** (1.0 / m)

        def g(s):
            if s == 0.0:
                # regularised integrand vanishes like s at the free boundary
                return 0.0
            phi = s**m
            return integrand_theta(math.cos(phi), math.sin(phi)) * m * s ** (m - 1)

        val = quad_compact(g, 0.0, top, tol=1e-13)
    return (2.0 * val) ** (1.0 / q)


def contact_flux_dx_norm(p: float, mu: float, mass: float, t: float) -> float:
    """L^2 norm of d/dx (|U_x|^(p-1) U_x) for the contact wave at time t."""
    c = selfsimilar_constants(p, mu, mass)
    edge = c.radius * t ** (1.0 / (p + 1))
    scale = t ** (1.0 / (p + 1))

    def g(x):
        xi = x / scale
        core = max(c.A - c.B * xi * xi, 0.0)
        # d/dx [tau^(-p/(p+1)) core^(p/(p-1))]
        val = core ** (1.0 / (p - 1)) * (p / (p - 1)) * (-2.0 * c.B * xi) / scale ** (p + 1)
        return val * val

    return math.sqrt(2.0 * quad_compact(g, 0.0, edge, tol=1e-14))


# --------------------------------------------------------------------------
# rarefaction waves


def _rarefaction_branch(flux: FluxModel, u_minus: float, u_plus: float) -> str:
    if not u_minus < u_plus:
        raise OutOfBranch(f"need u_minus < u_plus, got {u_minus}, {u_plus}")
    for name, (lo, hi) in flux.branches().items():
        if lo <= u_minus and u_plus <= hi:
            return name
    raise OutOfBranch(f"[{u_minus}, {u_plus}] is not contained in a convex branch of {flux.kind!r}")


def exact_rarefaction(flux: FluxModel, u_minus: float, u_plus: float, t: float, x):
    """Centred rarefaction fan u^r(x/t) = lambda^{-1}(x/t) clipped to the end states."""
    if not t > 0:
        raise InvalidParams("exact rarefaction needs t > 0")
    branch = _rarefaction_branch(flux, u_minus, u_plus)
    lam_m, lam_p = float(flux.df(u_minus)), float(flux.df(u_plus))
    xs = np.asarray(x, dtype=float)
    w = np.clip(xs / t, lam_m, lam_p)
    out = lambda_inverse_array(flux, w, branch=branch)
    out = np.where(w <= lam_m, u_minus, np.where(w >= lam_p, u_plus, out))
    return out[()] if np.ndim(out) == 0 else out


def _w0(x0, lam_m, lam_p):
    # (lam_m + lam_p)/2 + (lam_p - lam_m)/2 tanh(x0), written through the
    # logistic function so both tails keep full relative precision
    x0 = np.asarray(x0, dtype=float)
    return np.where(x0 <= 0.0, lam_m + (lam_p - lam_m) * expit(2.0 * x0),
                    lam_p - (lam_p - lam_m) * expit(-2.0 * x0))


def _w0_prime(x0, lam_m, lam_p):
    z = 2.0 * np.asarray(x0, dtype=float)
    return 2.0 * (lam_p - lam_m) * expit(z) * expit(-z)


def _foot_scalar(x: float, t: float, lam_m: float, lam_p: float) -> float:
    """Foot x0 of the characteristic through (t, x), with geometric bracket expansion."""
    if t == 0.0:
        return x
    h = lambda x0: x0 + float(_w0(x0, lam_m, lam_p)) * t - x
    lo, hi, half = x - 1.0, x + 1.0, 1.0
    for _ in range(60):
        if h(lo) <= 0.0 <= h(hi):
            return find_root_monotone(h, lo, hi, tol=0.0)
        half *= 2.0
        lo, hi = x - half, x + half
    raise NoBracket(f"characteristic foot not bracketed for x={x}, t={t}")


def _foot_array(x: np.ndarray, t: float, lam_m: float, lam_p: float) -> np.ndarray:
    if t == 0.0:
        return x.astype(float)
    # w0 lies in (lam_m, lam_p), so x - lam_p t and x - lam_m t bracket the foot
    h = lambda x0: x0 + _w0(x0, lam_m, lam_p) * t - x
    return bisect_increasing(h, x - lam_p * t, x - lam_m * t)


def _smooth_rarefaction_parts(flux, u_minus, u_plus, t, x):
    if t < 0:
        raise InvalidParams("smooth rarefaction needs t >= 0")
    branch = _rarefaction_branch(flux, u_minus, u_plus)
    lam_m, lam_p = float(flux.df(u_minus)), float(flux.df(u_plus))
    xs = np.asarray(x, dtype=float)
    if xs.ndim == 0:
        x0 = np.asarray(_foot_scalar(float(xs), t, lam_m, lam_p))
        w = _w0(x0, lam_m, lam_p)
        value = np.asarray(lambda_inverse(flux, float(w), branch=branch, tol=0.0))
    else:
        x0 = _foot_array(xs, t, lam_m, lam_p)
        w = _w0(x0, lam_m, lam_p)
        value = lambda_inverse_array(flux, w, branch=branch)
    value = np.clip(value, u_minus, u_plus)
    return x0, value, lam_m, lam_p


def smooth_rarefaction(flux: FluxModel, u_minus: float, u_plus: float, t: float, x):
    """Rarefaction smoothed by tanh initial data and exact characteristics."""
    _, value, _, _ = _smooth_rarefaction_parts(flux, u_minus, u_plus, t, x)
    return value[()] if np.ndim(value) == 0 else value


def smooth_rarefaction_dx(flux: FluxModel, u_minus: float, u_plus: float, t: float, x):
    x0, value, lam_m, lam_p = _smooth_rarefaction_parts(flux, u_minus, u_plus, t, x)
    dw0 = _w0_prime(x0, lam_m, lam_p)
    dw = dw0 / (1.0 + dw0 * t)
    out = dw / flux.d2f(value)
    return out[()] if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# composite states


def multiwave_case(params: Params) -> str:
    a, b = params.flux.degenerate_interval()
    um, up = params.u_minus, params.u_plus
    if params.flux.kind not in ("reduced_quadratic", "interval_degenerate"):
        raise CaseUnsupported(f"multiwave pattern needs a degenerate flux, got {params.flux.kind!r}")
    if a < um < b < up:
        return "contact_rarefaction"
    if um < a < b < up:
        return "rarefaction_contact_rarefaction"
    raise CaseUnsupported(f"states ({um}, {up}) do not straddle the degenerate interval ({a}, {b})")


def multiwave(params: Params, t: float, x):
    """Asymptotic multiwave pattern: contact wave plus exact rarefaction fans."""
    if not t > 0:
        raise InvalidParams("multiwave pattern needs t > 0")
    case = multiwave_case(params)
    flux = params.flux
    a, b = flux.degenerate_interval()
    shift = flux.contact_speed() * t
    xs = np.asarray(x, dtype=float)
    if case == "contact_rarefaction":
        cw = Params(params.p, params.mu, params.u_minus, b, flux)
        out = contact_wave(cw, t, xs - shift) + exact_rarefaction(flux, b, params.u_plus, t, xs) - b
    else:
        cw = Params(params.p, params.mu, a, b, flux)
        out = (exact_rarefaction(flux, params.u_minus, a, t, xs) - a
               + contact_wave(cw, t, xs - shift)
               + exact_rarefaction(flux, b, params.u_plus, t, xs) - b)
    return out[()] if np.ndim(out) == 0 else out


def _check_reduced(params: Params):
    flux = params.flux
    reduced = (flux.kind == "reduced_quadratic"
               or (flux.kind == "interval_degenerate" and flux.b == 0.0 and flux.tilt == 0.0
                   and flux.a < params.u_minus))
    if not reduced or not params.u_minus < 0.0 < params.u_plus:
        raise CaseUnsupported("tilde_U needs the reduced configuration: flat flux on the left of 0, "
                              "u_minus < 0 < u_plus")


def _tilde_pieces(params: Params):
    _check_reduced(params)
    contact = Params(params.p, params.mu, params.u_minus, 0.0, params.flux)
    return contact, params.flux


def tilde_U(params: Params, t: float, x):
    """Approximate asymptotic state U(1+t, x) + U^r(t, x) of the reduced problem."""
    contact, flux = _tilde_pieces(params)
    out = contact_wave(contact, t, x, time_offset=1.0) + smooth_rarefaction(flux, 0.0, params.u_plus, t, x)
    return out[()] if np.ndim(out) == 0 else out


def tilde_U_dx(params: Params, t: float, x):
    contact, flux = _tilde_pieces(params)
    out = contact_wave_dx(contact, t, x, time_offset=1.0) + smooth_rarefaction_dx(flux, 0.0, params.u_plus, t, x)
    return out[()] if np.ndim(out) == 0 else out


def _signed_power(s, p):
    return np.abs(s) ** (p - 1) * s


def remainder_Fp_tilde(params: Params, t: float, x):
    """Interaction part of the remainder (the terms without the outer x-derivative)."""
    contact, flux = _tilde_pieces(params)
    xs = np.asarray(x, dtype=float)
    U = contact_wave(contact, t, xs, time_offset=1.0)
    Ux = contact_wave_dx(contact, t, xs, time_offset=1.0)
    Ur = smooth_rarefaction(flux, 0.0, params.u_plus, t, xs)
    Urx = smooth_rarefaction_dx(flux, 0.0, params.u_plus, t, xs)
    lam_sum = flux.df(U + Ur)
    return -(lam_sum - flux.df(Ur)) * Urx - lam_sum * Ux


def remainder_Fp(params: Params, t: float, x):
    """Remainder F_p with d/dt tilde_U + d/dx f(tilde_U) - mu d/dx(|tilde_U_x|^(p-1) tilde_U_x) = -F_p.

    The viscous interaction term is differentiated by a centred difference of
    the analytic inner expression with step 1e-5 (1+t)^(1/(p+1)).
    """
    if not t > 0:
        raise InvalidParams("remainder needs t > 0")
    contact, flux = _tilde_pieces(params)
    p = params.p
    xs = np.asarray(x, dtype=float)
    h = 1e-5 * (1.0 + t) ** (1.0 / (p + 1))

    def inner(y):
        Ux = contact_wave_dx(contact, t, y, time_offset=1.0)
        Urx = smooth_rarefaction_dx(flux, 0.0, params.u_plus, t, y)
        return _signed_power(Ux + Urx, p) - _signed_power(Ux, p)

    viscous = params.mu * (inner(xs + h) - inner(xs - h)) / (2.0 * h)
    out = remainder_Fp_tilde(params, t, xs) + viscous
    return out[()] if np.ndim(out) == 0 else out


def contact_point_X(params: Params, t: float, tol: float = 1e-12) -> float:
    """Unique zero of tilde_U(t, .)."""
    if t < 0:
        raise InvalidParams("contact point needs t >= 0")
    _check_reduced(params)
    c = selfsimilar_constants(params.p, params.mu, -params.u_minus)
    lo = -c.radius * (1.0 + t) ** (1.0 / (params.p + 1))
    hi = float(params.flux.df(params.u_plus)) * t + 10.0
    return find_root_monotone(lambda y: float(tilde_U(params, t, np.array([y]))[0]), lo, hi, tol=tol)


def smoothed_multiwave(params: Params, t: float, x):
    """Multiwave pattern with smoothed fans and the contact wave taken at 1 + t.

    Coincides with ``tilde_U`` in the reduced configuration and extends it to
    the three-wave case, where it serves as solver initial data and reference.
    """
    if t < 0:
        raise InvalidParams("smoothed multiwave needs t >= 0")
    case = multiwave_case(params)
    flux = params.flux
    a, b = flux.degenerate_interval()
    xs = np.asarray(x, dtype=float)
    shift = flux.contact_speed() * t
    if case == "contact_rarefaction":
        cw = Params(params.p, params.mu, params.u_minus, b, flux)
        out = (contact_wave(cw, t, xs - shift, time_offset=1.0)
               + smooth_rarefaction(flux, b, params.u_plus, t, xs) - b)
    else:
        cw = Params(params.p, params.mu, a, b, flux)
        out = (smooth_rarefaction(flux, params.u_minus, a, t, xs) - a
               + contact_wave(cw, t, xs - shift, time_offset=1.0)
               + smooth_rarefaction(flux, b, params.u_plus, t, xs) - b)
    return out[()] if np.ndim(out) == 0 else out
