"""Checkerboard Metropolis dynamics for the 2D Ising model.

Units are reduced: coupling J = 1 and Boltzmann's constant is folded into the
temperature, so ``kT`` is an energy. Two interchangeable backends perform a
color pass:

* ``color_sweep`` -- scalar reference, one site at a time in plain Python.
* ``sweep_data_parallel`` -- branch-free whole-lattice array pass.

Both consume exactly one draw from a site's stream per update (also when the
move is downhill and accepted without looking at the draw) and look up the
acceptance threshold in the same precomputed table, so they produce
bit-identical trajectories from the same :class:`~lattice_mc.rng.StreamSet`.
"""

from __future__ import annotations

import enum
import functools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    BoundaryMode,
    Color,
    Grid,
    GridDims,
    check_mode,
    color_sites,
    neighbor_sum,
    neighbor_table,
    neighbors,
    parity,
)
from .rng import DEFAULT_PARAMS, LcgParams, StreamSet, spawn_streams

UP, DOWN = 1, -1
SPIN_PALETTE = {UP: (255, 0, 0), DOWN: (0, 0, 255)}

# dE = 2 * s * (sum of 4 neighbor spins) lies in [-8, 8]
_DE_OFFSET = 8


class Backend(enum.Enum):
    SCALAR = "scalar"
    DATA_PARALLEL = "data-parallel"


@dataclass(frozen=True)
class IsingConfig:
    dims: GridDims
    kT: float
    p_up: float = 0.5
    sweeps: int = 1000
    burn_in: int = 0
    master_seed: int = 0
    backend: Backend = Backend.DATA_PARALLEL
    mode: BoundaryMode = BoundaryMode.PERIODIC
    params: LcgParams = DEFAULT_PARAMS

    def __post_init__(self):
        if not self.kT > 0:
            raise ValueError(f"kT must be > 0, got {self.kT}")
        if not 0.0 <= self.p_up <= 1.0:
            raise ValueError(f"p_up must lie in [0, 1], got {self.p_up}")
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be >= 1, got {self.sweeps}")
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError(f"burn_in must satisfy 0 <= burn_in < sweeps, got {self.burn_in}")
        check_mode(self.dims, self.mode)


@dataclass
class SweepState:
    lattice: Grid
    streams: StreamSet
    mode: BoundaryMode = BoundaryMode.PERIODIC
    sweep_counter: int = 0
    next_color: Color = Color.BLACK

    def __post_init__(self):
        if len(self.streams) != self.lattice.dims.sites:
            raise ValueError("need exactly one stream per lattice site")
        check_mode(self.lattice.dims, self.mode)

    def _advance_color(self) -> None:
        if self.next_color is Color.WHITE:
            self.sweep_counter += 1
        self.next_color = self.next_color.other()

    def copy(self) -> "SweepState":
        return SweepState(self.lattice.copy(), self.streams.copy(), self.mode,
                          self.sweep_counter, self.next_color)


@dataclass
class ObservableSeries:
    """Energy and magnetization after each full sweep."""

    burn_in: int = 0
    sweep: list[int] = field(default_factory=list)
    energy: list[int] = field(default_factory=list)
    magnetization: list[int] = field(default_factory=list)

    def record(self, sweep: int, energy: int, magnetization: int) -> None:
        self.sweep.append(sweep)
        self.energy.append(energy)
        self.magnetization.append(magnetization)

    def __len__(self) -> int:
        return len(self.sweep)

    def expected_energy(self) -> float:
        return float(np.mean(self.energy[self.burn_in:]))

    def expected_magnetization(self) -> float:
        return float(np.mean(self.magnetization[self.burn_in:]))

    def to_csv(self) -> str:
        lines = ["sweep,energy,magnetization"]
        lines += [f"{s},{e},{m}" for s, e, m in zip(self.sweep, self.energy, self.magnetization)]
        return "\n".join(lines) + "\n"


@dataclass
class IsingResult:
    lattice: Grid
    series: ObservableSeries
    expected_energy: float
    expected_magnetization: float


# -- initial state ----------------------------------------------------------


def init_from_streams(dims: GridDims, p_up: float, streams: StreamSet) -> Grid:
    """Up with probability ``p_up``, using (and consuming) each site's first draw.

    The endpoints are exact: 0 gives all down and 1 all up, whatever the draws.
    """
    draws = streams.next_unit().reshape(dims.shape)
    if p_up <= 0.0:
        up = np.zeros(dims.shape, dtype=bool)
    elif p_up >= 1.0:
        up = np.ones(dims.shape, dtype=bool)
    else:
        up = draws <= p_up
    return Grid(dims, np.where(up, UP, DOWN).astype(np.int8))


def random_init(dims: GridDims, p_up: float, master_seed: int,
                params: LcgParams = DEFAULT_PARAMS) -> Grid:
    if not 0.0 <= p_up <= 1.0:
        raise ValueError(f"p_up must lie in [0, 1], got {p_up}")
    return init_from_streams(dims, p_up, spawn_streams(master_seed, dims.sites, params))


def initial_state(config: IsingConfig) -> SweepState:
    streams = spawn_streams(config.master_seed, config.dims.sites, config.params)
    lattice = init_from_streams(config.dims, config.p_up, streams)
    return SweepState(lattice, streams, config.mode)


# -- observables ------------------------------------------------------------


def total_energy(lattice: Grid, mode: BoundaryMode = BoundaryMode.PERIODIC) -> int:
    """-sum over edges of s_j * s_k, each edge once (as a site's E and S bond)."""
    s = lattice.cells.astype(np.int64)
    if mode is BoundaryMode.PERIODIC:
        bonds = s * np.roll(s, -1, axis=1) + s * np.roll(s, -1, axis=0)
        return -int(bonds.sum())
    return -int((s[:, :-1] * s[:, 1:]).sum() + (s[:-1, :] * s[1:, :]).sum())


def magnetization(lattice: Grid) -> int:
    return int(lattice.cells.sum(dtype=np.int64))


def delta_energy(lattice: Grid, site: tuple[int, int], mode: BoundaryMode = BoundaryMode.PERIODIC) -> int:
    """Energy change from flipping the spin at ``site`` = (x, y)."""
    x, y = site
    around = sum(int(lattice[nx, ny]) for nx, ny in neighbors(x, y, lattice.dims, mode))
    return 2 * int(lattice[x, y]) * around


def acceptance_probability(dE: int, kT: float) -> float:
    """Boltzmann ratio exp(-dE/kT); callers treat dE < 0 as always accepted."""
    if not kT > 0:
        raise ValueError(f"kT must be > 0, got {kT}")
    return math.exp(-dE / kT)


@functools.lru_cache(maxsize=64)
def _acceptance_table(kT: float) -> tuple[float, ...]:
    return tuple(acceptance_probability(dE, kT) if dE >= 0 else 1.0
                 for dE in range(-_DE_OFFSET, _DE_OFFSET + 1))


def acceptance_table(kT: float) -> np.ndarray:
    """Thresholds indexed by ``dE + 8``; shared by both backends."""
    return np.array(_acceptance_table(kT))


@functools.lru_cache(maxsize=32)
def _neighbor_lists(dims: GridDims, mode: BoundaryMode) -> list[list[int]]:
    return neighbor_table(dims, mode)


@functools.lru_cache(maxsize=64)
def _color_site_list(dims: GridDims, color: Color) -> list[int]:
    return color_sites(dims, color).tolist()


# -- scalar backend ---------------------------------------------------------


def site_update(state: SweepState, site: tuple[int, int], kT: float) -> bool:
    """Metropolis decision at one site; mutates ``state`` and returns whether it flipped."""
    dims = state.lattice.dims
    if parity(*site, dims) is not state.next_color:
        raise ValueError(f"site {site} is not {state.next_color.name}, the color being swept")
    idx = dims.index(*site)
    dE = delta_energy(state.lattice, site, state.mode)
    draw = float(state.streams.next_unit([idx])[0])
    flip = dE < 0 or draw <= _acceptance_table(kT)[dE + _DE_OFFSET]
    if flip:
        state.lattice[site] = -state.lattice[site]
    return flip


def color_sweep(state: SweepState, kT: float, order: Sequence[int] | None = None) -> SweepState:
    """Update every site of ``state.next_color`` in turn (scalar reference).

    ``order`` optionally permutes the visiting order (flat site indices); it
    must be exactly the sites of the current color.
    """
    dims = state.lattice.dims
    sites = _color_site_list(dims, state.next_color)
    if order is not None:
        order = [int(s) for s in order]
        if sorted(order) != sites:
            raise ValueError("order must be a permutation of the sites being swept")
        sites = order
    nbrs = _neighbor_lists(dims, state.mode)
    table = _acceptance_table(kT)
    p = state.streams.params
    a, b, mask, n = p.a, p.b, p.mask, float(p.n_mod)

    spins = state.lattice.cells.ravel().tolist()
    rng = state.streams.states.tolist()
    for s in sites:
        spin = spins[s]
        around = 0
        for j in nbrs[s]:
            around += spins[j]
        dE = 2 * spin * around
        r = (a * rng[s] + b) & mask
        rng[s] = r
        if dE < 0 or r / n <= table[dE + _DE_OFFSET]:
            spins[s] = -spin

    state.lattice.cells[...] = np.asarray(spins, dtype=np.int8).reshape(dims.shape)
    state.streams.states[...] = np.asarray(rng, dtype=np.uint64)
    state._advance_color()
    return state


# -- data-parallel backend --------------------------------------------------


def sweep_data_parallel(state: SweepState, kT: float) -> SweepState:
    """Same contract as :func:`color_sweep`, as one masked whole-lattice pass.

    No per-site branches: the flip mask is computed arithmetically for every
    site of the color and applied as ``spin * (1 - 2 * flip)``.
    """
    dims = state.lattice.dims
    idx = _color_site_array(dims, state.next_color)
    table = acceptance_table(kT)

    cells = state.lattice.cells
    flat = cells.reshape(-1)
    spins = flat[idx].astype(np.int32)
    around = neighbor_sum(cells.astype(np.int32), state.mode).reshape(-1)[idx]
    dE = 2 * spins * around
    draw = state.streams.next_unit(idx)
    flip = (dE < 0) | (draw <= table[dE + _DE_OFFSET])
    flat[idx] = (spins * (1 - 2 * flip.astype(np.int32))).astype(np.int8)
    state._advance_color()
    return state


@functools.lru_cache(maxsize=64)
def _color_site_array(dims: GridDims, color: Color) -> np.ndarray:
    arr = color_sites(dims, color)
    arr.setflags(write=False)
    return arr


_PASSES: dict[Backend, Callable[[SweepState, float], SweepState]] = {
    Backend.SCALAR: color_sweep,
    Backend.DATA_PARALLEL: sweep_data_parallel,
}


def full_sweep(state: SweepState, kT: float, backend: Backend = Backend.DATA_PARALLEL) -> SweepState:
    """Black pass then White pass."""
    one_pass = _PASSES[backend]
    one_pass(state, kT)
    one_pass(state, kT)
    return state


def run(config: IsingConfig, on_sweep: Callable[[int, SweepState], None] | None = None) -> IsingResult:
    """Initialize, then perform ``config.sweeps`` full sweeps recording E and M.

    ``on_sweep(k, state)`` is called after initialization (k = 0) and after
    every full sweep k.
    """
    state = initial_state(config)
    series = ObservableSeries(burn_in=config.burn_in)
    if on_sweep is not None:
        on_sweep(0, state)
    for k in range(1, config.sweeps + 1):
        full_sweep(state, config.kT, config.backend)
        series.record(k, total_energy(state.lattice, config.mode), magnetization(state.lattice))
        if on_sweep is not None:
            on_sweep(k, state)
    return IsingResult(state.lattice, series, series.expected_energy(), series.expected_magnetization())


def boltzmann_distribution(energies: Sequence[float], kT: float) -> np.ndarray:
    """Normalized exp(-E/kT) weights."""
    e = np.asarray(energies, dtype=np.float64)
    w = np.exp(-(e - e.min()) / kT)
    return w / w.sum()
