"""Discrete norms, perturbation extraction, power-law fits and diagnostics."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import GridFunction, Params
from .errors import DegenerateRatio, InsufficientData, InvalidParams, InvalidQ, NonPositiveValues
from .profiles import (contact_wave, multiwave, multiwave_case, smoothed_multiwave, tilde_U,
                       tilde_U_dx)

NORM_COLUMNS = ("l1", "l2", "l4", "linf", "dxu_lp1", "dxphi_lp1", "dxu_lr1", "gq2", "mass")
REFERENCES = ("tildeU", "multiwave")


def _check_q(q: float):
    if not (q >= 1 and not math.isinf(q)):
        raise InvalidQ(f"q must lie in [1, inf), got {q}")


def lq_norm(gf: GridFunction, q: float) -> float:
    _check_q(q)
    v = np.abs(gf.values)
    if q == 1:
        return float(np.sum(v) * gf.dx)
    if q == 2:
        return math.sqrt(float(np.dot(v, v)) * gf.dx)
    return float(np.sum(v**q) * gf.dx) ** (1.0 / q)


def linf_norm(gf: GridFunction) -> float:
    return float(np.max(np.abs(gf.values)))


def face_slopes(gf: GridFunction) -> np.ndarray:
    return np.diff(gf.values) / gf.dx


def deriv_lq_norm(gf: GridFunction, q: float) -> float:
    """L^q norm of the face difference quotients."""
    _check_q(q)
    s = np.abs(face_slopes(gf))
    return float(np.sum(s**q) * gf.dx) ** (1.0 / q)


def is_reduced(params: Params) -> bool:
    """True when the flux is flat left of 0 and u_minus < 0 < u_plus."""
    flux = params.flux
    flat_left = (flux.kind == "reduced_quadratic"
                 or (flux.kind == "interval_degenerate" and flux.b == 0.0 and flux.tilt == 0.0
                     and flux.a < params.u_minus))
    return flat_left and params.u_minus < 0.0 < params.u_plus


def reference_state(params: Params, t: float, x, reference: str = "tildeU"):
    """``tildeU`` is the smoothed state (exactly tilde_U in the reduced case).

    With the zero flux both references reduce to the contact wave, shifted by
    one time unit for ``tildeU``.
    """
    if params.flux.kind == "zero" and reference in REFERENCES:
        if reference == "multiwave" and t == 0:
            return np.where(np.asarray(x) < 0.0, params.u_minus, params.u_plus)
        return contact_wave(params, t, x, time_offset=1.0 if reference == "tildeU" else 0.0)
    if reference == "tildeU":
        if is_reduced(params):
            return tilde_U(params, t, x)
        multiwave_case(params)
        return smoothed_multiwave(params, t, x)
    if reference == "multiwave":
        if t == 0:
            return np.where(np.asarray(x) < 0.0, params.u_minus, params.u_plus)
        return multiwave(params, t, x)
    raise InvalidParams(f"unknown reference {reference!r}; expected one of {REFERENCES}")


def perturbation(u: GridFunction, params: Params, t: float, reference: str = "tildeU") -> GridFunction:
    """Deviation of ``u`` from the reference state at time ``t`` on the same grid."""
    return u.with_values(u.values - reference_state(params, t, u.x, reference))


# --------------------------------------------------------------------------
# norm time series


@dataclass
class NormSeries:
    times: list[float] = field(default_factory=list)
    records: dict[str, list[float]] = field(default_factory=lambda: {c: [] for c in NORM_COLUMNS})
    status: str = "ok"
    message: str = ""

    def append(self, t: float, record: dict[str, float]):
        if self.times and not t > self.times[-1]:
            raise InvalidParams(f"times must increase strictly: {t} after {self.times[-1]}")
        self.times.append(float(t))
        for c in NORM_COLUMNS:
            self.records[c].append(float(record.get(c, math.nan)))

    def column(self, name: str) -> np.ndarray:
        if name not in self.records:
            raise KeyError(name)
        return np.asarray(self.records[name], dtype=float)

    def __len__(self):
        return len(self.times)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t," + ",".join(NORM_COLUMNS) + "\n")
        for i, t in enumerate(self.times):
            row = [format_float(t)] + [format_float(self.records[c][i]) for c in NORM_COLUMNS]
            buf.write(",".join(row) + "\n")
        if self.status != "ok":
            buf.write(f"# status={self.status} {self.message}".rstrip() + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "NormSeries":
        series = cls()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        body = []
        for ln in lines:
            if ln.startswith("#"):
                if "status=" in ln:
                    rest = ln.split("status=", 1)[1]
                    series.status, _, series.message = rest.partition(" ")
                continue
            body.append(ln)
        reader = csv.DictReader(body)
        series.records = {c: [] for c in reader.fieldnames if c != "t"}
        for row in reader:
            series.times.append(float(row["t"]))
            for c in series.records:
                series.records[c].append(float(row[c]) if row[c] != "" else math.nan)
        return series


def format_float(v: float) -> str:
    """17 significant digits; empty field for a missing value."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".17g")


# --------------------------------------------------------------------------
# rate fits


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r2: float
    window: tuple[float, float]
    n: int

    def __str__(self):
        return (f"exponent={self.exponent:.6f} intercept={self.intercept:.6f} r2={self.r2:.6f} "
                f"window=[{self.window[0]:g}, {self.window[1]:g}] n={self.n}")


def fit_power_law(times, values, offset: float = 1.0, min_samples: int = 8,
                  window: tuple[float, float] | None = None) -> RateFit:
    """Least-squares line of log(value) against log(offset + t)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, values = times[keep], values[keep]
    keep = ~np.isnan(values)
    times, values = times[keep], values[keep]
    if times.size < min_samples:
        raise InsufficientData(f"need at least {min_samples} samples, got {times.size}")
    if np.any(values <= 0):
        raise NonPositiveValues("power-law fit needs strictly positive values")
    X = np.log(offset + times)
    Y = np.log(values)
    design = np.column_stack([X, np.ones_like(X)])
    (slope, intercept), *_ = np.linalg.lstsq(design, Y, rcond=None)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    lo, hi = float(times.min()), float(times.max())
    return RateFit(float(slope), float(intercept), r2, (lo, hi), int(times.size))


def fit_rate(series: NormSeries, column: str, window: tuple[float, float], offset: float = 1.0) -> RateFit:
    return fit_power_law(series.times, series.column(column), offset=offset, window=window)


# --------------------------------------------------------------------------
# diagnostics


def gq_regions(phi: np.ndarray, U: np.ndarray, dU: np.ndarray, q: float) -> dict[str, np.ndarray]:
    """Pointwise integrands of the four sign-partitioned pieces of G_q."""
    a = np.abs(phi)
    tot = U + phi
    r1 = (tot >= 0) & (U >= 0)
    r23 = (tot < 0) & (U >= 0)
    r4 = (tot >= 0) & (U < 0)
    return {
        "same_sign": np.where(r1, a**q * dU, 0.0),
        "crossing_phi": np.where(r23, a ** (q - 1) * U * dU, 0.0),
        "crossing_state": np.where(r23, np.abs(U) ** q * dU, 0.0),
        "lifted": np.where(r4, (a ** (q - 1) * (q * U + (q - 1) * a) + np.abs(U) ** q) * dU, 0.0),
    }


def gq_diagnostic(phi: GridFunction, params: Params, t: float, q: float = 2.0) -> float:
    """Sign-partitioned weighted L^q functional of the perturbation against d/dx tilde_U."""
    if not q >= 2 or math.isinf(q):
        raise InvalidQ(f"G_q needs finite q >= 2, got {q}")
    x = phi.x
    U = tilde_U(params, t, x)
    dU = tilde_U_dx(params, t, x)
    parts = gq_regions(phi.values, U, dU, q)
    return float(sum(np.sum(v) for v in parts.values()) * phi.dx)


def interp_scaling_check(phi: GridFunction, p: float, q: float) -> float:
    """sup|phi| over (int phi^2)^(p/D) (int |phi|^(q-2) |phi_x|^(p+1))^(1/D), D = 3p+q-1.

    The ratio is invariant under phi -> c phi(lambda x).
    """
    if not q >= 2:
        raise InvalidQ(f"q must be >= 2, got {q}")
    v = phi.values
    if not np.any(v):
        raise DegenerateRatio("interpolation ratio undefined for phi = 0")
    dx = phi.dx
    D = 3 * p + q - 1
    l2sq = float(np.dot(v, v)) * dx
    mid = 0.5 * (v[1:] + v[:-1])
    slope = np.diff(v) / dx
    weight = np.abs(mid) ** (q - 2) if q != 2 else 1.0
    energy = float(np.sum(weight * np.abs(slope) ** (p + 1)) * dx)
    if energy == 0.0:
        raise DegenerateRatio("interpolation ratio undefined for a constant phi")
    return float(np.max(np.abs(v))) / (l2sq ** (p / D) * energy ** (1.0 / D))
