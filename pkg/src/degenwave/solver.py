"""Explicit finite-volume integrator: Engquist-Osher convection, face-centred p-Laplacian diffusion."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .analysis import (NORM_COLUMNS, REFERENCES, NormSeries, deriv_lq_norm, gq_diagnostic, is_reduced,
                       linf_norm, lq_norm, reference_state)
from .core import FluxModel, GridFunction, Params, cell_centers
from .errors import DomainTooSmall, Instability, InvalidParams
from .profiles import multiwave_case, selfsimilar_constants

PERTURBATION_KINDS = ("none", "gaussian", "bump")
_FLUX_CODES = {"zero": 0, "reduced_quadratic": 1, "interval_degenerate": 2}
MARGIN_CELLS = 5

# kernel status codes
_OK, _OUT_OF_RANGE, _NON_FINITE = 0, 1, 2


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max) and self.x_max > self.x_min):
            raise InvalidParams(f"bad grid interval [{self.x_min}, {self.x_max}]")
        if int(self.n) != self.n or self.n < 16:
            raise InvalidParams(f"grid needs n >= 16 cells, got {self.n}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    def centers(self) -> np.ndarray:
        return cell_centers(self.x_min, self.x_max, self.n)


@dataclass(frozen=True)
class Perturbation:
    kind: str = "none"
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise InvalidParams(f"perturbation kind must be one of {PERTURBATION_KINDS}, got {self.kind!r}")
        if not math.isfinite(self.amplitude) or not math.isfinite(self.center):
            raise InvalidParams("perturbation amplitude and center must be finite")
        if not (self.width > 0 and math.isfinite(self.width)):
            raise InvalidParams(f"perturbation width must be positive, got {self.width}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "none" or self.amplitude == 0.0:
            return np.zeros_like(x)
        z = (x - self.center) / self.width
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-z * z)
        # C^1 cosine bump supported on |z| < 1
        return np.where(np.abs(z) < 1.0, 0.5 * self.amplitude * (1.0 + np.cos(np.pi * z)), 0.0)


@dataclass(frozen=True)
class RunConfig:
    params: Params
    grid: GridSpec
    t_end: float
    cfl_safety: float = 0.4
    snapshot_times: tuple[float, ...] = ()
    perturbation: Perturbation = field(default_factory=Perturbation)
    record_every: float = 1.0
    reference: str = "tildeU"
    r: float | None = None

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise InvalidParams(f"t_end must be positive, got {self.t_end}")
        if not 0 < self.cfl_safety <= 1:
            raise InvalidParams(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not (self.record_every > 0 and math.isfinite(self.record_every)):
            raise InvalidParams(f"record_every must be positive, got {self.record_every}")
        snaps = tuple(float(s) for s in self.snapshot_times)
        if list(snaps) != sorted(snaps) or any(s < 0 or s > self.t_end for s in snaps):
            raise InvalidParams("snapshot_times must be sorted and lie in [0, t_end]")
        object.__setattr__(self, "snapshot_times", snaps)
        if self.reference not in REFERENCES:
            raise InvalidParams(f"reference must be one of {REFERENCES}, got {self.reference!r}")
        if self.r is not None and not self.r >= 1:
            raise InvalidParams(f"r must be >= 1, got {self.r}")

    def record_times(self) -> np.ndarray:
        k = int(math.floor(self.t_end / self.record_every + 1e-9))
        times = np.arange(k + 1) * self.record_every
        if self.t_end - times[-1] > 1e-9 * self.t_end:
            times = np.append(times, self.t_end)
        else:
            times[-1] = min(times[-1], self.t_end)
        return times


@dataclass(frozen=True)
class SolverState:
    t: float
    u: GridFunction
    step_count: int = 0
    dt_last: float = 0.0


@dataclass(frozen=True)
class Snapshot:
    t: float
    u: GridFunction
    reference: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return self.u.values - self.reference


# --------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def _f(u, kind, a, b, tilt):
    if kind == 0:
        return 0.0
    if kind == 1:
        return 0.5 * u * u if u > 0.0 else 0.0
    lo = min(u - a, 0.0)
    hi = max(u - b, 0.0)
    return 0.5 * lo * lo + 0.5 * hi * hi + tilt * u


@njit(cache=True)
def _df(u, kind, a, b, tilt):
    if kind == 0:
        return 0.0
    if kind == 1:
        return max(u, 0.0)
    return min(u - a, 0.0) + max(u - b, 0.0) + tilt


@njit(cache=True)
def _faces(u, left, right, dx, mu, p, kind, a, b, tilt, us, G):
    """Fill total face fluxes G = F - mu*D; return (max|f'|, max|s|^(p-1))."""
    n = u.size
    fus = _f(us, kind, a, b, tilt)
    speed = abs(_df(left, kind, a, b, tilt))
    grad = 0.0
    for j in range(n + 1):
        ul = left if j == 0 else u[j - 1]
        ur = right if j == n else u[j]
        if j < n:
            speed = max(speed, abs(_df(ur, kind, a, b, tilt)))
        F = _f(max(ul, us), kind, a, b, tilt) + _f(min(ur, us), kind, a, b, tilt) - fus
        s = (ur - ul) / dx
        m = abs(s) if p == 2.0 else abs(s) ** (p - 1.0)
        grad = max(grad, m)
        G[j] = F - mu * m * s
    speed = max(speed, abs(_df(right, kind, a, b, tilt)))
    return speed, grad


@njit(cache=True)
def _dt_from(speed, grad, dx, mu, p, cfl, fallback):
    dt = np.inf
    if speed > 0.0:
        dt = dx / speed
    if grad > 0.0 and mu > 0.0:
        dt = min(dt, dx * dx / (2.0 * mu * p * grad))
    if dt == np.inf:
        return fallback
    return cfl * dt


@njit(cache=True)
def _advance(u, t, t_stop, left, right, dx, mu, p, kind, a, b, tilt, us, cfl, fallback, lo, hi):
    n = u.size
    G = np.empty(n + 1)
    steps = 0
    dt = 0.0
    status = 0
    while t < t_stop:
        speed, grad = _faces(u, left, right, dx, mu, p, kind, a, b, tilt, us, G)
        dt = _dt_from(speed, grad, dx, mu, p, cfl, fallback)
        last = t + dt >= t_stop
        if last:
            dt = t_stop - t
        r = dt / dx
        bad = False
        for j in range(n):
            v = u[j] - r * (G[j + 1] - G[j])
            u[j] = v
            if not np.isfinite(v):
                bad = True
            elif v < lo or v > hi:
                status = max(status, 1)
        steps += 1
        t = t_stop if last else t + dt
        if bad:
            return t, steps, dt, 2
    return t, steps, dt, status


# --------------------------------------------------------------------------
# python layer


def _flux_args(flux: FluxModel):
    return _FLUX_CODES[flux.kind], float(flux.a), float(flux.b), float(flux.tilt), float(flux.sonic_point())


def face_fluxes(u: np.ndarray, params: Params, dx: float) -> np.ndarray:
    """Total numerical flux F - mu*D at the n+1 faces, ghosts at u_minus / u_plus."""
    kind, a, b, tilt, us = _flux_args(params.flux)
    G = np.empty(u.size + 1)
    _faces(np.ascontiguousarray(u, dtype=float), params.u_minus, params.u_plus, dx, params.mu, params.p,
           kind, a, b, tilt, us, G)
    return G


def stable_dt(state: SolverState, params: Params, cfl_safety: float, fallback: float = 1.0,
              t_next: float | None = None) -> float:
    """CFL-limited step; ``fallback`` when the state has neither speed nor gradient."""
    kind, a, b, tilt, us = _flux_args(params.flux)
    G = np.empty(state.u.n + 1)
    speed, grad = _faces(np.ascontiguousarray(state.u.values), params.u_minus, params.u_plus, state.u.dx,
                         params.mu, params.p, kind, a, b, tilt, us, G)
    dt = float(_dt_from(speed, grad, state.u.dx, params.mu, params.p, cfl_safety, fallback))
    if t_next is not None and t_next > state.t:
        dt = min(dt, t_next - state.t)
    return dt


def _bounds(params: Params, u0: np.ndarray) -> tuple[float, float]:
    jump = abs(params.u_plus - params.u_minus)
    lo = min(params.u_minus, params.u_plus, float(np.min(u0))) - 0.1 * jump
    hi = max(params.u_minus, params.u_plus, float(np.max(u0))) + 0.1 * jump
    return lo, hi


def step(state: SolverState, params: Params, dt: float) -> SolverState:
    """One explicit Euler step; raises Instability on non-finite output."""
    if not dt > 0:
        raise InvalidParams(f"dt must be positive, got {dt}")
    G = face_fluxes(state.u.values, params, state.u.dx)
    new = state.u.values - (dt / state.u.dx) * np.diff(G)
    if not np.all(np.isfinite(new)):
        raise Instability(f"non-finite values after step {state.step_count + 1} at t={state.t + dt:g}")
    return SolverState(state.t + dt, state.u.with_values(new), state.step_count + 1, dt)


def contact_extent(params: Params, t: float) -> tuple[float, float]:
    """Leftmost and rightmost points of the wave pattern's variation at time t."""
    flux = params.flux
    if flux.kind == "zero":
        left_state, right_state, speed = params.u_minus, params.u_plus, 0.0
        fan_left = fan_right = 0.0
    else:
        case = multiwave_case(params)
        a, b = flux.degenerate_interval()
        left_state = params.u_minus if case == "contact_rarefaction" else a
        right_state = b
        speed = flux.contact_speed()
        fan_left = float(flux.df(params.u_minus)) * t if case != "contact_rarefaction" else speed * t
        fan_right = float(flux.df(params.u_plus)) * t
    c = selfsimilar_constants(params.p, params.mu, right_state - left_state)
    half = c.radius * (1.0 + t) ** (1.0 / (params.p + 1.0))
    return min(speed * t - half, fan_left), max(speed * t + half, fan_right)


def check_domain(config: RunConfig):
    lo, hi = contact_extent(config.params, config.t_end)
    margin = MARGIN_CELLS * config.grid.dx
    if lo < config.grid.x_min + margin or hi > config.grid.x_max - margin:
        raise DomainTooSmall(
            f"wave pattern at t_end spans [{lo:.6g}, {hi:.6g}], grid interior is "
            f"[{config.grid.x_min + margin:.6g}, {config.grid.x_max - margin:.6g}]")


def initial_data(config: RunConfig) -> SolverState:
    check_domain(config)
    g = config.grid
    x = g.centers()
    base = reference_state(config.params, 0.0, x, "tildeU")
    values = base + config.perturbation(x)
    return SolverState(0.0, GridFunction(g.x_min, g.x_max, g.n, values))


def advance(state: SolverState, params: Params, t_stop: float, cfl_safety: float, fallback_dt: float,
            bounds: tuple[float, float]) -> tuple[SolverState, int]:
    """Integrate to exactly ``t_stop``; returns the new state and a kernel status code.

    Raises Instability on non-finite values; leaving ``bounds`` only sets the status.
    """
    if t_stop <= state.t:
        return state, _OK
    kind, a, b, tilt, us = _flux_args(params.flux)
    u = np.array(state.u.values, dtype=float)
    t, steps, dt, status = _advance(u, state.t, t_stop, params.u_minus, params.u_plus, state.u.dx,
                                    params.mu, params.p, kind, a, b, tilt, us, cfl_safety, fallback_dt,
                                    bounds[0], bounds[1])
    if status == _NON_FINITE or not np.all(np.isfinite(u)):
        raise Instability(f"non-finite values near t={t:g} after {state.step_count + int(steps)} steps")
    out = SolverState(float(t), state.u.with_values(u), state.step_count + int(steps), float(dt))
    return out, int(status)


def norm_record(state: SolverState, config: RunConfig) -> tuple[dict[str, float], np.ndarray]:
    params = config.params
    u = state.u
    ref = reference_state(params, state.t, u.x, config.reference)
    phi = u.with_values(u.values - ref)
    p = params.p
    rec = {
        "l1": lq_norm(phi, 1),
        "l2": lq_norm(phi, 2),
        "l4": lq_norm(phi, 4),
        "linf": linf_norm(phi),
        "dxu_lp1": deriv_lq_norm(u, p + 1),
        "dxphi_lp1": deriv_lq_norm(phi, p + 1),
        "dxu_lr1": deriv_lq_norm(u, config.r + 1) if config.r is not None else math.nan,
        "gq2": gq_diagnostic(phi, params, state.t, 2.0) if is_reduced(params) else math.nan,
        "mass": math.fsum(u.values) * u.dx,
    }
    assert set(rec) == set(NORM_COLUMNS)
    return rec, ref


def run(config: RunConfig) -> tuple[NormSeries, dict[float, Snapshot]]:
    """Integrate to t_end, sampling norms every ``record_every`` and storing snapshots.

    On Instability the partial series comes back with ``status='failed'``.
    """
    state = initial_data(config)
    params = config.params
    bounds = _bounds(params, state.u.values)
    perturbed = config.perturbation.kind != "none" and config.perturbation.amplitude != 0.0
    records = config.record_times()
    record_set = {float(t) for t in records}
    snap_set = set(config.snapshot_times)
    stops = sorted(record_set | snap_set)

    series = NormSeries()
    snapshots: dict[float, Snapshot] = {}
    warned = False
    for t_stop in stops:
        try:
            state, status = advance(state, params, t_stop, config.cfl_safety, config.record_every, bounds)
            if status == _OUT_OF_RANGE:
                msg = (f"solution left [{bounds[0]:.6g}, {bounds[1]:.6g}] before t={t_stop:g}")
                if not perturbed:
                    raise Instability(msg)
                if not warned:
                    warnings.warn(msg, RuntimeWarning, stacklevel=2)
                    warned = True
        except Instability as exc:
            series.status = "failed"
            series.message = str(exc).replace("\n", " ")
            return series, snapshots
        rec, ref = norm_record(state, config)
        if t_stop in record_set:
            series.append(t_stop, rec)
        if t_stop in snap_set:
            snapshots[t_stop] = Snapshot(t_stop, state.u, ref)
    return series, snapshots
