"""Spanning-probability curve over a porosity window, for several lattice sizes.

    python3 scripts/percolation_curve.py --sizes 32 64 128 --trials 200
"""
import argparse

import numpy as np

from lattice_mc.lattice import GridDims
from lattice_mc.percolation import estimate_threshold


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--p-min", type=float, default=0.50)
    ap.add_argument("--p-max", type=float, default=0.70)
    ap.add_argument("--p-step", type=float, default=0.01)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    grid = np.round(np.arange(args.p_min, args.p_max + args.p_step / 2, args.p_step), 6)
    for L in args.sizes:
        curve = estimate_threshold(GridDims(L, L), grid, args.trials, args.seed, jobs=args.jobs)
        est = "none" if curve.estimate is None else f"{curve.estimate:.4f}"
        print(f"L={L}: crossing {est}")
        for p, f in zip(curve.porosities, curve.spanning):
            print(f"  {p:.3f} {f:.3f} {'#' * int(round(40 * f))}")


if __name__ == "__main__":
    main()
