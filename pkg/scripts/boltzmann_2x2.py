"""Exact analysis of the 2x2 periodic checkerboard chain against the Boltzmann law.

Builds the 16x16 one-sweep transition matrix, reports its closed classes,
and compares a long engine run with both the Boltzmann distribution and the
stationary law of the class the run actually lives in.

    python3 scripts/boltzmann_2x2.py --kt 2.5 --sweeps 1000000 --seed 1
"""
import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import brute_energy, exact_sweep_matrix, two_by_two_states  # noqa: E402

from lattice_mc import ising  # noqa: E402
from lattice_mc.lattice import BoundaryMode, GridDims  # noqa: E402


def closed_classes(P: np.ndarray) -> list[list[int]]:
    reach = (P > 0).astype(int) + np.eye(len(P), dtype=int)
    for _ in range(len(P)):
        reach = np.minimum(reach @ reach, 1)
    classes = []
    for i in range(len(P)):
        cls = [j for j in range(len(P)) if reach[i, j] and reach[j, i]]
        closed = all(not reach[i, k] or reach[k, i] for k in range(len(P)))
        if closed and cls not in classes:
            classes.append(cls)
    return classes


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kt", type=float, default=2.5)
    ap.add_argument("--sweeps", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    P = exact_sweep_matrix(args.kt)
    energies = [brute_energy(g.cells, BoundaryMode.PERIODIC) for g in two_by_two_states()]
    pi = ising.boltzmann_distribution(energies, args.kt)
    print(f"||pi P - pi||_inf = {np.abs(pi @ P - pi).max():.2e}")
    print("closed classes:", closed_classes(P))

    cfg = ising.IsingConfig(GridDims(2, 2), args.kt, 0.5, args.sweeps, 0, args.seed)
    counts = np.zeros(16)
    weights = np.array([[1, 2], [4, 8]])

    def visit(k, state):
        if k:
            counts[int(((state.lattice.cells > 0) * weights).sum())] += 1

    ising.run(cfg, on_sweep=visit)
    freq = counts / args.sweeps
    se = np.sqrt(pi * (1 - pi) / args.sweeps)
    print("state  E   freq      boltzmann  z")
    for s in range(16):
        print(f"{s:5d} {energies[s]:3d}  {freq[s]:.5f}  {pi[s]:.5f}  {(freq[s] - pi[s]) / se[s]:+8.1f}")


if __name__ == "__main__":
    main()
