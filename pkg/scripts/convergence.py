"""Self-convergence order of the time integrators on 1D Remark-1 data.

Usage: python scripts/convergence.py [--N 256 --L 100 --t-end 2 --dt 0.1]
"""
import argparse

import numpy as np

from dampedeuler.config import make_remark1_ic
from dampedeuler.dynamics import step_exponential_euler, step_rk4, step_strang
from dampedeuler.spectral import Grid

STEPPERS = {"strang-exponential": step_strang, "rk4": step_rk4,
            "exponential-euler": step_exponential_euler}


def evolve(stepper, s, dt, t_end):
    for _ in range(int(round(t_end / dt))):
        s = stepper(s, dt)
    return np.concatenate([s.a[None], s.u])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--L", type=float, default=100.0)
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("--t-end", type=float, default=2.0)
    ap.add_argument("--dt", type=float, default=0.1)
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()

    s0 = make_remark1_ic(args.eps, Grid(1, args.N, args.L))
    dts = [args.dt / 2**i for i in range(args.levels)]
    for name, stepper in STEPPERS.items():
        finals = [evolve(stepper, s0, dt, args.t_end) for dt in dts]
        diffs = [np.max(np.abs(a - b)) for a, b in zip(finals, finals[1:])]
        orders = [np.log2(a / b) for a, b in zip(diffs, diffs[1:])]
        print(f"{name:18s} " + " ".join(f"{o:6.3f}" for o in orders))


if __name__ == "__main__":
    main()
