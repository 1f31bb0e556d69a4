"""Tabulate the low-frequency decay slopes of every Green symbol block.

Usage: python scripts/symbol_slopes.py [--r0 0.25] [--t-max 1000]
"""
import argparse

import numpy as np

from dampedeuler.greens import EXPECTED_SLOPE_OFFSET, verify_multiplier_bound
from dampedeuler.spectral import CutoffProfile


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r0", type=float, default=0.25)
    ap.add_argument("--R0", type=float, default=0.45)
    ap.add_argument("--t-min", type=float, default=10.0)
    ap.add_argument("--t-max", type=float, default=1000.0)
    args = ap.parse_args()

    cut = CutoffProfile(args.r0, args.R0)
    times = np.arange(args.t_min, args.t_max + 0.5)
    print(f"{'block':>5} {'k':>2} {'slope':>9} {'expected':>9} {'dev':>7}")
    for block in EXPECTED_SLOPE_OFFSET:
        for k in range(4):
            fit = verify_multiplier_bound(block, k, cut, times)
            print(f"{block:>5} {k:>2} {fit.slope:9.4f} {fit.expected:9.2f} {fit.deviation:7.4f}")


if __name__ == "__main__":
    main()
