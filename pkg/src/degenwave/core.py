"""Parameters, flux models, grids and the scalar numerical primitives.

Everything here is an immutable value or a pure function.  The flux models
cover the three families the rest of the package needs:

``zero``
    f = 0 (pure p-Laplacian diffusion, porous-medium mode).
``reduced_quadratic``
    f(u) = u**2/2 for u >= 0 and 0 for u < 0 (convex on the right,
    linearly degenerate on the left).
``interval_degenerate``
    quadratic outside [a, b], flat inside, plus an optional linear tilt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidFlux, InvalidParams, NoBracket, NoConvergence, OutOfBranch

FLUX_KINDS = ("zero", "reduced_quadratic", "interval_degenerate")


@dataclass(frozen=True)
class FluxModel:
    kind: str
    a: float = 0.0
    b: float = 0.0
    tilt: float = 0.0

    def f(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "reduced_quadratic":
            return 0.5 * np.maximum(u, 0.0) ** 2
        left = np.minimum(u - self.a, 0.0)
        right = np.maximum(u - self.b, 0.0)
        return 0.5 * left**2 + 0.5 * right**2 + self.tilt * u

    def df(self, u):
        """Characteristic speed lambda(u) = f'(u)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "reduced_quadratic":
            return np.maximum(u, 0.0)
        return np.minimum(u - self.a, 0.0) + np.maximum(u - self.b, 0.0) + self.tilt

    def d2f(self, u):
        # one-sided convention at the kinks: the convex side wins
        u = np.asarray(u, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "reduced_quadratic":
            return np.where(u >= 0.0, 1.0, 0.0)
        return np.where((u <= self.a) | (u >= self.b), 1.0, 0.0)

    def sonic_point(self) -> float:
        """A state where f' vanishes (f' is nondecreasing, so this splits the flux)."""
        if self.kind in ("zero", "reduced_quadratic"):
            return 0.0
        if self.tilt > 0:
            return self.a - self.tilt
        if self.tilt < 0:
            return self.b - self.tilt
        return self.a

    def branches(self) -> dict[str, tuple[float, float]]:
        """State intervals on which f'' > 0, keyed by name."""
        if self.kind == "zero":
            return {}
        if self.kind == "reduced_quadratic":
            return {"right": (0.0, math.inf)}
        return {"left": (-math.inf, self.a), "right": (self.b, math.inf)}

    def contact_speed(self) -> float:
        """Speed of the contact discontinuity across the flat part of f."""
        if self.kind == "interval_degenerate":
            fa, fb = float(self.f(self.a)), float(self.f(self.b))
            return (fb - fa) / (self.b - self.a)
        return 0.0

    def degenerate_interval(self) -> tuple[float, float]:
        if self.kind == "interval_degenerate":
            return (self.a, self.b)
        if self.kind == "reduced_quadratic":
            return (-math.inf, 0.0)
        return (-math.inf, math.inf)


def make_flux(kind: str, a: float | None = None, b: float | None = None, tilt: float = 0.0) -> FluxModel:
    if kind not in FLUX_KINDS:
        raise InvalidFlux(f"unknown flux kind {kind!r}; expected one of {FLUX_KINDS}")
    if not math.isfinite(tilt):
        raise InvalidFlux("tilt must be finite")
    if kind == "interval_degenerate":
        if a is None or b is None:
            raise InvalidFlux("interval_degenerate needs both a and b")
        if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
            raise InvalidFlux(f"need finite a < b, got a={a}, b={b}")
        return FluxModel(kind, float(a), float(b), float(tilt))
    if tilt != 0.0:
        raise InvalidFlux(f"tilt is only supported for interval_degenerate, not {kind}")
    return FluxModel(kind)


@dataclass(frozen=True)
class Params:
    p: float
    mu: float
    u_minus: float
    u_plus: float
    flux: FluxModel = field(default_factory=lambda: FluxModel("reduced_quadratic"))

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 1.0):
            raise InvalidParams(f"p must be > 1, got {self.p}")
        if not (math.isfinite(self.mu) and self.mu > 0.0):
            raise InvalidParams(f"mu must be > 0, got {self.mu}")
        if not (math.isfinite(self.u_minus) and math.isfinite(self.u_plus)):
            raise InvalidParams("far-field states must be finite")
        if not self.u_minus < self.u_plus:
            raise InvalidParams(f"need u_minus < u_plus, got {self.u_minus}, {self.u_plus}")

    @property
    def jump(self) -> float:
        return self.u_plus - self.u_minus


@dataclass(frozen=True)
class SelfSimilarConstants:
    A: float
    B: float
    I_p: float
    mass: float
    p: float
    mu: float

    @property
    def radius(self) -> float:
        """Support half-width sqrt(A/B) of the self-similar profile."""
        return math.sqrt(self.A / self.B)

    def normalization_residual(self) -> float:
        """Relative error in 2 A^((p+1)/(2(p-1))) B^(-1/2) I_p = mass."""
        p = self.p
        lhs = 2.0 * self.A ** ((p + 1) / (2 * (p - 1))) / math.sqrt(self.B) * self.I_p
        return abs(lhs - self.mass) / self.mass


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Cell-centred samples on a uniform grid of ``n`` cells over [x_min, x_max]."""

    x_min: float
    x_max: float
    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.n < 3:
            raise InvalidParams(f"grid needs n >= 3 cells, got {self.n}")
        if not self.x_max > self.x_min:
            raise InvalidParams("x_max must exceed x_min")
        values = np.array(self.values, dtype=float)
        if values.shape != (self.n,):
            raise InvalidParams(f"expected {self.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidParams("grid values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self) -> np.ndarray:
        return cell_centers(self.x_min, self.x_max, self.n)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.x_min, self.x_max, self.n, values)

    @classmethod
    def sample(cls, func, x_min: float, x_max: float, n: int) -> "GridFunction":
        return cls(x_min, x_max, n, func(cell_centers(x_min, x_max, n)))


def cell_centers(x_min: float, x_max: float, n: int) -> np.ndarray:
    dx = (x_max - x_min) / n
    return x_min + (np.arange(n) + 0.5) * dx


# --------------------------------------------------------------------------
# root finding


def find_root_monotone(h: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
                       max_iter: int = 400) -> float:
    """Bisection for a nondecreasing scalar map with a sign change on [lo, hi].

    ``tol=0`` bisects down to adjacent floating point numbers.
    """
    h_lo, h_hi = h(lo), h(hi)
    if h_lo == 0.0:
        return lo
    if h_hi == 0.0:
        return hi
    if h_lo * h_hi > 0.0:
        raise NoBracket(f"no sign change on [{lo}, {hi}]: h={h_lo}, {h_hi}")
    if h_lo > 0.0:
        # decreasing orientation is tolerated; swap so h(lo) < 0 < h(hi)
        lo, hi = hi, lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if abs(hi - lo) <= tol or mid == lo or mid == hi:
            break
        h_mid = h(mid)
        if h_mid == 0.0:
            return mid
        if h_mid < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_increasing(h: Callable[[np.ndarray], np.ndarray], lo, hi, max_iter: int = 200) -> np.ndarray:
    """Elementwise bisection of an increasing map; requires h(lo) <= 0 <= h(hi).

    Runs until every bracket has collapsed to adjacent floats.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (mid != lo) & (mid != hi)
        if not active.any():
            break
        neg = h(mid) < 0.0
        lo = np.where(active & neg, mid, lo)
        hi = np.where(active & ~neg, mid, hi)
    return 0.5 * (lo + hi)


def _pick_branch(flux: FluxModel, w: float, branch: str | None) -> tuple[str, float, float]:
    branches = flux.branches()
    if not branches:
        raise OutOfBranch(f"flux kind {flux.kind!r} has no convex branch")
    if branch is None:
        if len(branches) == 1:
            branch = next(iter(branches))
        elif w > flux.tilt:
            branch = "right"
        elif w < flux.tilt:
            branch = "left"
        else:
            raise OutOfBranch(f"speed {w} sits at the junction of both branches; pass branch=")
    if branch not in branches:
        raise OutOfBranch(f"flux has no {branch!r} branch")
    lo, hi = branches[branch]
    return branch, lo, hi


def _branch_speed_bracket(flux, lo, hi, w):
    """Finite state bracket [s_lo, s_hi] on a branch with f'(s_lo) <= w <= f'(s_hi)."""
    if math.isinf(lo):
        s_hi = hi
        step = 1.0
        s_lo = hi - step
        for _ in range(80):
            if float(flux.df(s_lo)) <= w:
                break
            step *= 2.0
            s_lo = hi - step
        return s_lo, s_hi
    s_lo = lo
    step = 1.0
    s_hi = lo + step
    for _ in range(80):
        if float(flux.df(s_hi)) >= w:
            break
        step *= 2.0
        s_hi = lo + step
    return s_lo, s_hi


def lambda_inverse(flux: FluxModel, w: float, branch: str | None = None, tol: float = 1e-12) -> float:
    """State u on a convex branch with f'(u) = w, by bisection."""
    branch, lo, hi = _pick_branch(flux, w, branch)
    speed_lo = -math.inf if math.isinf(lo) else float(flux.df(lo))
    speed_hi = math.inf if math.isinf(hi) else float(flux.df(hi))
    if not speed_lo <= w <= speed_hi:
        raise OutOfBranch(f"speed {w} outside the {branch} branch range [{speed_lo}, {speed_hi}]")
    s_lo, s_hi = _branch_speed_bracket(flux, lo, hi, w)
    return find_root_monotone(lambda u: float(flux.df(u)) - w, s_lo, s_hi, tol=tol)


def lambda_inverse_array(flux: FluxModel, w, branch: str | None = None) -> np.ndarray:
    """Vectorised ``lambda_inverse`` to full double precision."""
    w = np.asarray(w, dtype=float)
    probe = float(np.max(w)) if branch is None and w.size else 0.0
    if branch is None:
        branch, lo, hi = _pick_branch(flux, probe, None)
    else:
        branch, lo, hi = _pick_branch(flux, probe, branch)
    if w.size == 0:
        return w.copy()
    speed_lo = -math.inf if math.isinf(lo) else float(flux.df(lo))
    speed_hi = math.inf if math.isinf(hi) else float(flux.df(hi))
    if np.any(w < speed_lo) or np.any(w > speed_hi):
        raise OutOfBranch(f"speeds outside the {branch} branch range [{speed_lo}, {speed_hi}]")
    s_lo, _ = _branch_speed_bracket(flux, lo, hi, float(np.min(w)))
    _, s_hi = _branch_speed_bracket(flux, lo, hi, float(np.max(w)))
    return bisect_increasing(lambda u: flux.df(u) - w, np.full(w.shape, s_lo), np.full(w.shape, s_hi))


# --------------------------------------------------------------------------
# quadrature


def quad_compact(g: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10,
                 max_depth: int = 40, full_output: bool = False):
    """Adaptive Simpson quadrature of a bounded integrand on [lo, hi].

    Panels are split until the two-level Simpson difference |S_fine - S_coarse|
    falls under a share of ``tol`` proportional to the panel width.  Panels that reach
    ``max_depth`` are accepted as they are and their difference is still
    counted in the error bound; ``NoConvergence`` is raised only if the total
    bound exceeds ``tol``.

    The reported bound is the sum of |S_fine - S_coarse| over accepted panels,
    without the asymptotic 1/15 factor, and the returned value is the
    Richardson-corrected fine estimate.

    Returns the value, or ``(value, error_bound)`` when ``full_output``.
    """
    if not hi >= lo:
        raise ValueError(f"need lo <= hi, got {lo}, {hi}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if hi == lo:
        return (0.0, 0.0) if full_output else 0.0

    width = hi - lo
    total = 0.0
    err = 0.0
    compensation = 0.0

    def simpson(a, fa, b, fb):
        m = 0.5 * (a + b)
        fm = g(m)
        return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb = g(lo), g(hi)
    m, fm, whole = simpson(lo, fa, hi, fb)
    # explicit stack keeps left-to-right order so the sum is deterministic
    stack = [(lo, fa, hi, fb, m, fm, whole, 0)]
    while stack:
        a, fa, b, fb, m, fm, whole, depth = stack.pop()
        lm, flm, left = simpson(a, fa, m, fm)
        rm, frm, right = simpson(m, fm, b, fb)
        delta = left + right - whole
        if abs(delta) <= tol * (b - a) / width or depth >= max_depth:
            piece = left + right + delta / 15.0
            # Kahan summation over panels
            y = piece - compensation
            t = total + y
            compensation = (t - total) - y
            total = t
            err += abs(delta)
            continue
        stack.append((m, fm, b, fb, rm, frm, right, depth + 1))
        stack.append((a, fa, m, fm, lm, flm, left, depth + 1))
    if err > tol:
        raise NoConvergence(f"adaptive Simpson error bound {err:.3e} exceeds tol {tol:.3e}",
                            estimate=total, error_bound=err)
    return (total, err) if full_output else total


def angular_integral(exponent: float) -> float:
    """Closed form of the integral of sin(theta)**exponent over [0, pi/2]."""
    return 0.5 * math.sqrt(math.pi) * math.exp(math.lgamma((exponent + 1) / 2) - math.lgamma(exponent / 2 + 1))
