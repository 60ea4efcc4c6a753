"""Command-line front end: profiles, solver runs, rate fits, verification and sweeps."""
from __future__ import annotations

import argparse
import configparser
import io
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import profiles
from .analysis import NormSeries, fit_rate, format_float, reference_state
from .core import Params, make_flux
from .errors import ConfigError, DegenwaveError, Instability, NoConvergence
from .solver import GridSpec, Perturbation, RunConfig, check_domain, run
from .verify import SLOPE_TOL, full_suite, quick_suite, reports_to_csv, summary, thm32_exponent

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

_SECTIONS = {
    "params": ("p", "mu", "u_minus", "u_plus"),
    "params.flux": ("kind", "a", "b", "tilt"),
    "grid": ("x_min", "x_max", "n"),
    "perturbation": ("kind", "amplitude", "center", "width"),
    "run": ("t_end", "cfl_safety", "snapshot_times", "record_every", "reference", "r"),
}
_REQUIRED = {
    "params": ("p", "mu", "u_minus", "u_plus"),
    "grid": ("x_min", "x_max", "n"),
    "run": ("t_end",),
}
Q_COLUMNS = {1.0: "l1", 2.0: "l2", 4.0: "l4", math.inf: "linf"}


# --------------------------------------------------------------------------
# config files


def _float(section, key, raw) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from exc


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if not cp.has_option(section, key):
                raise ConfigError(f"missing key {key!r} in [{section}]")

    def get(section, key, default=None):
        return cp.get(section, key) if cp.has_option(section, key) else default

    try:
        fx = "params.flux"
        flux = make_flux(get(fx, "kind", "reduced_quadratic"),
                         a=_float(fx, "a", get(fx, "a")) if get(fx, "a") is not None else None,
                         b=_float(fx, "b", get(fx, "b")) if get(fx, "b") is not None else None,
                         tilt=_float(fx, "tilt", get(fx, "tilt", "0")))
        params = Params(*(_float("params", k, get("params", k)) for k in _SECTIONS["params"]), flux=flux)
        n_raw = get("grid", "n")
        if not n_raw.strip().isdigit():
            raise ConfigError(f"[grid] n: expected a positive integer, got {n_raw!r}")
        grid = GridSpec(_float("grid", "x_min", get("grid", "x_min")),
                        _float("grid", "x_max", get("grid", "x_max")), int(n_raw))
        pt = "perturbation"
        pert = Perturbation(get(pt, "kind", "none"), _float(pt, "amplitude", get(pt, "amplitude", "0")),
                            _float(pt, "center", get(pt, "center", "0")), _float(pt, "width", get(pt, "width", "1")))
        snaps_raw = get("run", "snapshot_times", "")
        snaps = tuple(_float("run", "snapshot_times", s) for s in snaps_raw.split(",") if s.strip())
        r_raw = get("run", "r")
        return RunConfig(params, grid, _float("run", "t_end", get("run", "t_end")),
                         cfl_safety=_float("run", "cfl_safety", get("run", "cfl_safety", "0.4")),
                         snapshot_times=snaps, perturbation=pert,
                         record_every=_float("run", "record_every", get("run", "record_every", "1")),
                         reference=get("run", "reference", "tildeU"),
                         r=_float("run", "r", r_raw) if r_raw not in (None, "") else None)
    except ConfigError:
        raise
    except DegenwaveError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(cfg: RunConfig) -> str:
    fl = cfg.params.flux
    out = io.StringIO()

    def section(name, items):
        out.write(f"[{name}]\n")
        for k, v in items:
            if v is not None:
                out.write(f"{k} = {v}\n")
        out.write("\n")

    r = lambda v: repr(float(v))
    pr = cfg.params
    section("params", [("p", r(pr.p)), ("mu", r(pr.mu)), ("u_minus", r(pr.u_minus)), ("u_plus", r(pr.u_plus))])
    interval = fl.kind == "interval_degenerate"
    section("params.flux", [("kind", fl.kind), ("a", r(fl.a) if interval else None),
                            ("b", r(fl.b) if interval else None), ("tilt", r(fl.tilt))])
    section("grid", [("x_min", r(cfg.grid.x_min)), ("x_max", r(cfg.grid.x_max)), ("n", str(cfg.grid.n))])
    pt = cfg.perturbation
    section("perturbation", [("kind", pt.kind), ("amplitude", r(pt.amplitude)), ("center", r(pt.center)),
                             ("width", r(pt.width))])
    section("run", [("t_end", r(cfg.t_end)), ("cfl_safety", r(cfg.cfl_safety)),
                    ("snapshot_times", ", ".join(r(s) for s in cfg.snapshot_times)),
                    ("record_every", r(cfg.record_every)), ("reference", cfg.reference),
                    ("r", r(cfg.r) if cfg.r is not None else None)])
    return out.getvalue().rstrip("\n") + "\n"


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# --------------------------------------------------------------------------
# output helpers


def write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def columns_csv(header, columns) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*columns):
        buf.write(",".join(format_float(v) for v in row) + "\n")
    return buf.getvalue()


def snapshot_csv(snap) -> str:
    return columns_csv(("x", "u", "reference", "phi"), (snap.u.x, snap.u.values, snap.reference, snap.phi))


def write_run(out_dir, series: NormSeries, snapshots):
    out_dir = Path(out_dir)
    write_atomic(out_dir / "norms.csv", series.to_csv())
    for t, snap in snapshots.items():
        write_atomic(out_dir / f"snapshot_{format_float(t)}.csv", snapshot_csv(snap))


# --------------------------------------------------------------------------
# subcommands

PROFILE_KINDS = ("barenblatt", "contact", "rarefaction", "smooth_rarefaction", "multiwave", "tildeU")


def _params_from_args(a) -> Params:
    flux = make_flux(a.flux, a=a.a, b=a.b, tilt=a.tilt)
    return Params(a.p, a.mu, a.u_minus, a.u_plus, flux)


def profile_values(kind: str, params: Params, t: float, x: np.ndarray, time_offset: float = 1.0,
                   mass: float | None = None):
    """(value, derivative or None) of a named profile sampled at x."""
    p, mu, flux = params.p, params.mu, params.flux
    if kind == "barenblatt":
        m = params.jump if mass is None else mass
        return profiles.barenblatt(p, mu, m, t, x, time_offset=time_offset), None
    if kind == "contact":
        return (profiles.contact_wave(params, t, x, time_offset=time_offset),
                profiles.contact_wave_dx(params, t, x, time_offset=time_offset))
    if kind == "rarefaction":
        return profiles.exact_rarefaction(flux, params.u_minus, params.u_plus, t, x), None
    if kind == "smooth_rarefaction":
        return (profiles.smooth_rarefaction(flux, params.u_minus, params.u_plus, t, x),
                profiles.smooth_rarefaction_dx(flux, params.u_minus, params.u_plus, t, x))
    if kind == "multiwave":
        return profiles.multiwave(params, t, x), None
    if kind == "tildeU":
        vals = reference_state(params, t, x, "tildeU")
        try:
            return vals, profiles.tilde_U_dx(params, t, x)
        except DegenwaveError:
            return vals, None
    raise ConfigError(f"unknown profile kind {kind!r}")


def cmd_profile(a) -> int:
    params = _params_from_args(a)
    x = np.linspace(a.x_min, a.x_max, a.n)
    value, dvalue = profile_values(a.kind, params, a.t, x, time_offset=a.time_offset, mass=a.mass)
    cols = [x, np.broadcast_to(value, x.shape)]
    header = ["x", "value"]
    if a.derivative and dvalue is not None:
        cols.append(np.broadcast_to(dvalue, x.shape))
        header.append("dvalue")
    text = columns_csv(header, cols)
    if a.out:
        write_atomic(a.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(a) -> int:
    cfg = load_config(a.config)
    check_domain(cfg)
    series, snaps = run(cfg)
    write_run(a.out, series, snaps)
    if series.status != "ok":
        print(f"run failed: {series.message}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {len(series)} norm records and {len(snaps)} snapshots to {a.out}")
    return EXIT_OK


RATES_HEADER = "column,exponent,intercept,r2,t_min,t_max,n"


def cmd_rates(a) -> int:
    try:
        series = NormSeries.from_csv(Path(a.norms).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {a.norms}: {exc}") from exc
    if a.column not in series.records:
        raise ConfigError(f"column {a.column!r} not in {a.norms}; available: {', '.join(series.records)}")
    fit = fit_rate(series, a.column, (a.t_min, a.t_max), offset=a.offset)
    row = ",".join([a.column, format_float(fit.exponent), format_float(fit.intercept), format_float(fit.r2),
                    format_float(fit.window[0]), format_float(fit.window[1]), str(fit.n)])
    print(fit)
    print(RATES_HEADER)
    print(row)
    if a.out:
        write_atomic(a.out, RATES_HEADER + "\n" + row + "\n")
    return EXIT_OK


def cmd_verify(a) -> int:
    reports = full_suite() if a.full else quick_suite()
    text = reports_to_csv(reports)
    if a.out:
        write_atomic(a.out, text)
    print(summary(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _parse_list(raw: str, what: str) -> list[float]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{what} is empty")
    try:
        return [float(s) for s in items]
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _sweep_job(cfg: RunConfig):
    return run(cfg)[0]


def sweep_threads() -> int:
    raw = os.environ.get("DEGENWAVE_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"DEGENWAVE_THREADS must be an integer, got {raw!r}") from exc
        if n < 1:
            raise ConfigError("DEGENWAVE_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


SUMMARY_HEADER = "p,q,fitted_slope,theorem_slope,margin,status"


def cmd_sweep(a) -> int:
    template = load_config(a.config)
    ps = _parse_list(a.p_list, "p-list")
    qs = _parse_list(a.q_list, "q-list")
    for q in qs:
        if q not in Q_COLUMNS:
            raise ConfigError(f"q={q:g} has no recorded norm column; choose from 1, 2, 4, inf")
    window = (a.t_min if a.t_min is not None else 0.1 * template.t_end,
              a.t_max if a.t_max is not None else template.t_end)
    unique_ps = list(dict.fromkeys(ps))
    configs = {p: replace(template, params=replace(template.params, p=p)) for p in unique_ps}
    for cfg in configs.values():
        check_domain(cfg)
    workers = max(1, min(sweep_threads(), len(configs)))
    if workers == 1:
        results = {p: _sweep_job(cfg) for p, cfg in configs.items()}
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {p: pool.submit(_sweep_job, cfg) for p, cfg in configs.items()}
            results = {p: f.result() for p, f in futures.items()}

    out = Path(a.out)
    rows = [SUMMARY_HEADER]
    numeric_failure = False
    for p in ps:
        series = results[p]
        write_atomic(out / f"p_{format_float(p)}" / "norms.csv", series.to_csv())
        for q in qs:
            theorem = -thm32_exponent(p, q)[0]
            if series.status != "ok":
                numeric_failure = True
                rows.append(",".join([format_float(p), format_float(q), "", format_float(theorem), "", "failed"]))
                continue
            try:
                slope = fit_rate(series, Q_COLUMNS[q], window).exponent
            except DegenwaveError:
                rows.append(",".join([format_float(p), format_float(q), "", format_float(theorem), "",
                                      "insufficient_data"]))
                continue
            margin = theorem + SLOPE_TOL - slope
            rows.append(",".join([format_float(p), format_float(q), format_float(slope), format_float(theorem),
                                  format_float(margin), "pass" if margin >= 0 else "fail"]))
    write_atomic(out / "summary.csv", "\n".join(rows) + "\n")
    print("\n".join(rows))
    return EXIT_NUMERIC if numeric_failure else EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="degenwave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pp = sub.add_parser("profile", help="sample a closed-form profile to CSV")
    pp.add_argument("--kind", choices=PROFILE_KINDS, required=True)
    pp.add_argument("--p", type=float, default=2.0)
    pp.add_argument("--mu", type=float, default=1.0)
    pp.add_argument("--u-minus", type=float, default=-0.5)
    pp.add_argument("--u-plus", type=float, default=0.5)
    pp.add_argument("--flux", default="reduced_quadratic")
    pp.add_argument("--a", type=float, default=None)
    pp.add_argument("--b", type=float, default=None)
    pp.add_argument("--tilt", type=float, default=0.0)
    pp.add_argument("--mass", type=float, default=None, help="barenblatt mass (default u_plus - u_minus)")
    pp.add_argument("--t", type=float, default=0.0)
    pp.add_argument("--time-offset", type=float, default=1.0,
                    help="barenblatt/contact profiles are evaluated at t + time_offset")
    pp.add_argument("--x-min", type=float, default=-10.0)
    pp.add_argument("--x-max", type=float, default=10.0)
    pp.add_argument("--n", type=int, default=401)
    pp.add_argument("--derivative", action="store_true", help="add a dvalue column where available")
    pp.add_argument("--out", default=None)
    pp.set_defaults(func=cmd_profile)

    ps = sub.add_parser("solve", help="run the finite-volume solver from a config file")
    ps.add_argument("config")
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_solve)

    pr = sub.add_parser("rates", help="fit a power law to a norms.csv column")
    pr.add_argument("norms")
    pr.add_argument("--column", required=True)
    pr.add_argument("--t-min", type=float, required=True)
    pr.add_argument("--t-max", type=float, required=True)
    pr.add_argument("--offset", type=float, default=1.0)
    pr.add_argument("--out", default=None)
    pr.set_defaults(func=cmd_rates)

    pv = sub.add_parser("verify", help="run the oracle checks")
    mode = pv.add_mutually_exclusive_group()
    mode.add_argument("--quick", action="store_true", help="closed-form checks only (default)")
    mode.add_argument("--full", action="store_true", help="include the long decay runs")
    pv.add_argument("--out", default=None)
    pv.set_defaults(func=cmd_verify)

    pw = sub.add_parser("sweep", help="run a template config over a p x q grid")
    pw.add_argument("config")
    pw.add_argument("--p-list", required=True)
    pw.add_argument("--q-list", required=True)
    pw.add_argument("--t-min", type=float, default=None)
    pw.add_argument("--t-max", type=float, default=None)
    pw.add_argument("--out", required=True)
    pw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (Instability, NoConvergence) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DegenwaveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
