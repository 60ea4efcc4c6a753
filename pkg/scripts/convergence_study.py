"""Grid refinement of the zero-flux solver against the Barenblatt profile."""
import argparse
import math

from degenwave.verify import barenblatt_solver_errors


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[256, 512, 1024, 2048, 4096])
    ap.add_argument("--t", type=float, default=3.0)
    args = ap.parse_args(argv)
    errs = barenblatt_solver_errors(tuple(args.n), t=args.t)
    print("n,l1_error,order")
    prev = None
    for n, e in zip(args.n, errs):
        order = "" if prev is None else f"{math.log2(prev / e):.3f}"
        print(f"{n},{e:.6e},{order}")
        prev = e


if __name__ == "__main__":
    main()
