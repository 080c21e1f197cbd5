import math

import numpy as np
import pytest

from lattice_mc import ising
from lattice_mc.lattice import BoundaryMode, Grid, GridDims


def brute_energy(cells, mode):
    """Edge enumeration: every site with its north and east neighbor."""
    h, w = cells.shape
    e = 0
    for y in range(h):
        for x in range(w):
            s = int(cells[y, x])
            if mode is BoundaryMode.PERIODIC:
                e -= s * int(cells[(y - 1) % h, x]) + s * int(cells[y, (x + 1) % w])
            else:
                if y > 0:
                    e -= s * int(cells[y - 1, x])
                if x < w - 1:
                    e -= s * int(cells[y, x + 1])
    return e


def state_code(cells) -> int:
    """Bit i set iff site i (row-major) is up."""
    return int(sum(1 << i for i, s in enumerate(cells.ravel().tolist()) if s > 0))


def two_by_two_states():
    dims = GridDims(2, 2)
    out = []
    for code in range(16):
        spins = [1 if (code >> i) & 1 else -1 for i in range(4)]
        out.append(Grid(dims, np.array(spins, dtype=np.int8).reshape(2, 2)))
    return out


def exact_sweep_matrix(kT: float) -> np.ndarray:
    """16x16 transition matrix of one Black+White sweep on the 2x2 torus.

    Built from the Metropolis rule directly (accept with min(1, exp(-dE/kT))),
    with energies from brute-force edge enumeration.
    """
    states = two_by_two_states()
    energies = [brute_energy(g.cells, BoundaryMode.PERIODIC) for g in states]

    def single(site):
        T = np.zeros((16, 16))
        for i, g in enumerate(states):
            flipped = g.cells.copy()
            flipped.ravel()[site] *= -1
            j = state_code(flipped)
            dE = energies[j] - energies[i]
            acc = min(1.0, math.exp(-dE / kT))
            T[i, j] += acc
            T[i, i] += 1 - acc
        return T

    black, white = [0, 3], [1, 2]
    P = np.eye(16)
    for site in black + white:
        P = P @ single(site)
    return P


BOLTZMANN_KT = 2.5
BOLTZMANN_SWEEPS = 10**6
BOLTZMANN_SEED = 1


@pytest.fixture(scope="session")
def boltzmann_chain():
    """Visit counts of the 16 states of a 2x2 periodic lattice, one per full sweep."""
    cfg = ising.IsingConfig(GridDims(2, 2), BOLTZMANN_KT, 0.5, BOLTZMANN_SWEEPS, 0, BOLTZMANN_SEED,
                            backend=ising.Backend.SCALAR)
    state = ising.initial_state(cfg)
    cells = state.lattice.cells
    codes = np.empty(BOLTZMANN_SWEEPS, dtype=np.int8)
    weights = np.array([[1, 2], [4, 8]], dtype=np.int8)
    sweep = ising.color_sweep
    for k in range(BOLTZMANN_SWEEPS):
        sweep(state, BOLTZMANN_KT)
        sweep(state, BOLTZMANN_KT)
        codes[k] = ((cells > 0) * weights).sum()
    counts = np.bincount(codes, minlength=16)
    energies = [brute_energy(g.cells, BoundaryMode.PERIODIC) for g in two_by_two_states()]
    exact = ising.boltzmann_distribution(energies, BOLTZMANN_KT)
    return counts, exact


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
