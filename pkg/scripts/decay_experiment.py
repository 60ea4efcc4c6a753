"""Run a decay experiment from an INI config and report fitted rates against the theorem exponents.

    python scripts/decay_experiment.py scripts/configs/canonical_p2.ini --out runs/p2
"""
import argparse
import sys
import time
from pathlib import Path

from degenwave.cli import load_config, write_run
from degenwave.solver import run
from degenwave.verify import decay_reports, default_checks

ROOT = Path(__file__).resolve().parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?", default=str(ROOT / "configs" / "canonical_p2.ini"))
    ap.add_argument("--out", default="runs/decay")
    ap.add_argument("--t-min", type=float, default=20.0)
    ap.add_argument("--t-max", type=float, default=None)
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    t0 = time.perf_counter()
    series, snaps = run(cfg)
    elapsed = time.perf_counter() - t0
    write_run(args.out, series, snaps)
    print(f"{len(series)} records, status={series.status}, {elapsed:.1f}s -> {args.out}")
    if series.status != "ok":
        print(series.message)
        return 3
    window = (args.t_min, args.t_max if args.t_max is not None else cfg.t_end)
    checks = default_checks(cfg.params.p, cfg.r)
    failed = 0
    for rep in decay_reports(Path(args.config).stem, series, cfg.params.p, window, checks):
        failed += not rep.passed
        print(f"{rep.status:4s} {rep.name:40s} measured={rep.measured:+.4f} theorem={rep.expected:+.4f}  {rep.notes}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
