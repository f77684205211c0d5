"""Thin-shell sweep over eps = 2^-4 .. 2^-9 for a few alpha values.

Writes one report directory per alpha under ``runs/shell_sweep`` and prints
the fitted log-log slopes next to the target 1 - (N+1) alpha.
"""

import argparse
from pathlib import Path

from outwave.experiments import SweepConfig, emit_report, run_shell_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=6)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.0, 0.05, 1 / 9])
    ap.add_argument("--kmin", type=int, default=4)
    ap.add_argument("--kmax", type=int, default=9)
    ap.add_argument("--picard", action="store_true", help="also run the Picard largeness check")
    ap.add_argument("--out", default="runs/shell_sweep")
    args = ap.parse_args()

    eps = [2.0**-k for k in range(args.kmin, args.kmax + 1)]
    for alpha in args.alphas:
        rep = run_shell_sweep(args.N, alpha, 1.0, eps, SweepConfig(), picard=args.picard)
        fit = rep.fits["weighted_sup"]
        target = 1 - (args.N + 1) * alpha
        print(f"alpha={alpha:.4f}  slope={fit.slope:.4f} +- {fit.half_width:.4f}  target={target:.4f}")
        emit_report(rep, Path(args.out) / f"alpha_{alpha:.4f}")


if __name__ == "__main__":
    main()
