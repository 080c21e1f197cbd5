"""Site percolation: porous media, wavefront invasion and threshold estimation.

All randomness lives in the medium. Invasion is deterministic synchronous
growth: every step invades all uninvaded pores adjacent (4-neighbor, clamped
edges) to the previous wavefront.
"""

from __future__ import annotations

import enum
from collections import deque
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lattice import Grid, GridDims, neighbors, BoundaryMode
from .rng import DEFAULT_PARAMS, LcgParams, mix_seeds, spawn_streams

SOLID, PORE, INVADED = 0, 1, 2
MEDIUM_PALETTE = {SOLID: (0, 0, 0), PORE: (255, 255, 255), INVADED: (0, 0, 255)}


class SourceBlockedError(ValueError):
    pass


class Axis(enum.Enum):
    VERTICAL = "vertical"  # top edge to bottom edge
    HORIZONTAL = "horizontal"  # left edge to right edge


@dataclass
class PorousMedium:
    dims: GridDims
    pores: np.ndarray  # bool, shape (height, width)
    porosity: float
    seed: int


@dataclass
class Cluster:
    """Invaded region plus the most recent wavefront (``layer``)."""

    invaded: np.ndarray  # bool, shape (height, width)
    layer: np.ndarray  # flat indices invaded in the latest step
    source: tuple[int, int] | None
    steps_taken: int = 0
    history: list[int] = field(default_factory=list)

    def frontier(self, medium: PorousMedium) -> np.ndarray:
        """Flat indices of invaded sites with at least one uninvaded pore neighbor.

        Only the latest layer can qualify: anything invaded earlier had its
        pore neighbors taken by the following step.
        """
        if self.layer.size == 0:
            return self.layer
        open_ = (medium.pores & ~self.invaded).reshape(-1)
        nb, ok = _neighbor_arrays(self.layer, medium.dims)
        has_open = (ok & open_[np.where(ok, nb, 0)]).any(axis=0)
        return self.layer[has_open]


@dataclass
class ThresholdCurve:
    dims: GridDims
    porosities: np.ndarray
    spanning: np.ndarray  # fraction of trials that spanned
    trials: int
    estimate: float | None

    def to_csv(self) -> str:
        lines = ["porosity,trials,spanning_fraction"]
        lines += [f"{p:.6f},{self.trials},{f:.6f}" for p, f in zip(self.porosities, self.spanning)]
        est = "nan" if self.estimate is None else f"{self.estimate:.6f}"
        lines.append(f"threshold_estimate,{est}")
        return "\n".join(lines) + "\n"


def generate_medium(dims: GridDims, porosity: float, seed: int,
                    params: LcgParams = DEFAULT_PARAMS) -> PorousMedium:
    """Pore iff the site's first draw <= porosity (exact at 0 and 1).

    Draws depend only on ``seed``, so media with the same seed are nested:
    raising the porosity only ever turns solids into pores.
    """
    if not 0.0 <= porosity <= 1.0:
        raise ValueError(f"porosity must lie in [0, 1], got {porosity}")
    draws = spawn_streams(seed, dims.sites, params).next_unit().reshape(dims.shape)
    if porosity <= 0.0:
        pores = np.zeros(dims.shape, dtype=bool)
    elif porosity >= 1.0:
        pores = np.ones(dims.shape, dtype=bool)
    else:
        pores = draws <= porosity
    return PorousMedium(dims, pores, porosity, seed)


def _neighbor_arrays(sites: np.ndarray, dims: GridDims) -> tuple[np.ndarray, np.ndarray]:
    """(4, n) neighbor indices in N, E, S, W order and their in-range mask."""
    w, h = dims.width, dims.height
    x, y = sites % w, sites // w
    nb = np.stack([sites - w, sites + 1, sites + w, sites - 1])
    ok = np.stack([y > 0, x < w - 1, y < h - 1, x > 0])
    return nb, ok


def new_cluster(medium: PorousMedium, source: tuple[int, int]) -> Cluster:
    x, y = source
    medium.dims.check(x, y)
    if not medium.pores[y, x]:
        raise SourceBlockedError(f"invasion source {source} is a solid site")
    invaded = np.zeros(medium.dims.shape, dtype=bool)
    invaded[y, x] = True
    return Cluster(invaded, np.array([y * medium.dims.width + x]), source)


def edge_cluster(medium: PorousMedium, axis: Axis = Axis.VERTICAL) -> Cluster:
    """Cluster seeded by every pore on the leading edge (top row, or left column)."""
    invaded = np.zeros(medium.dims.shape, dtype=bool)
    if axis is Axis.VERTICAL:
        invaded[0, :] = medium.pores[0, :]
    else:
        invaded[:, 0] = medium.pores[:, 0]
    return Cluster(invaded, np.flatnonzero(invaded), None)


def invade_step(medium: PorousMedium, cluster: Cluster) -> tuple[Cluster, bool]:
    """One synchronous wavefront step; mutates and returns ``cluster``."""
    if cluster.invaded.shape != medium.pores.shape or (cluster.invaded & ~medium.pores).any():
        raise ValueError("cluster is inconsistent with the medium (invaded solid or shape mismatch)")
    if cluster.layer.size == 0:
        return cluster, False
    nb, ok = _neighbor_arrays(cluster.layer, medium.dims)
    cand = nb[ok]
    inv = cluster.invaded.reshape(-1)
    cand = np.unique(cand[medium.pores.reshape(-1)[cand] & ~inv[cand]])
    cluster.layer = cand
    if cand.size == 0:
        return cluster, False
    inv[cand] = True
    cluster.steps_taken += 1
    cluster.history.append(int(cand.size))
    return cluster, True


def run_invasion(medium: PorousMedium, source: tuple[int, int] | Cluster,
                 on_step: Callable[[int, Cluster], None] | None = None,
                 stop: Callable[[Cluster], bool] | None = None) -> tuple[Cluster, int, bool]:
    """Grow until steady state.

    Returns ``(cluster, steps, spanned)`` where ``spanned`` is top-to-bottom
    spanning. ``on_step(k, cluster)`` fires for k = 0 and after each growth
    step; ``stop(cluster)`` may end the growth early.
    """
    cluster = source if isinstance(source, Cluster) else new_cluster(medium, source)
    if on_step is not None:
        on_step(0, cluster)
    while not (stop is not None and stop(cluster)):
        cluster, grew = invade_step(medium, cluster)
        if not grew:
            break
        if on_step is not None:
            on_step(cluster.steps_taken, cluster)
    return cluster, cluster.steps_taken, spans(cluster, medium.dims, Axis.VERTICAL)


def spans(cluster: Cluster | np.ndarray, dims: GridDims, axis: Axis = Axis.VERTICAL) -> bool:
    inv = cluster.invaded if isinstance(cluster, Cluster) else cluster
    if axis is Axis.VERTICAL:
        return bool(inv[0, :].any() and inv[dims.height - 1, :].any())
    return bool(inv[:, 0].any() and inv[:, dims.width - 1].any())


def composite(medium: PorousMedium, cluster: Cluster | None = None) -> Grid:
    """Solid/pore/invaded codes for image export."""
    cells = medium.pores.astype(np.uint8)
    if cluster is not None:
        cells[cluster.invaded] = INVADED
    return Grid(medium.dims, cells)


# -- threshold estimation ---------------------------------------------------


def spans_from_top(medium: PorousMedium) -> bool:
    """Flood from the whole top row; True once the bottom row is reached."""
    bottom = medium.dims.height - 1
    cluster = edge_cluster(medium, Axis.VERTICAL)
    cluster, _, spanned = run_invasion(
        medium, cluster, stop=lambda c: bool(c.invaded[bottom].any()))
    return spanned


def trial_seeds(master_seed: int, trials: int) -> list[int]:
    # 32-bit per-trial seeds; the same trial seed is reused at every porosity
    return [int(s) for s in mix_seeds(master_seed, np.arange(trials))]


def _count_spanning(args) -> int:
    dims, porosity, seeds, params = args
    return sum(spans_from_top(generate_medium(dims, porosity, s, params)) for s in seeds)


def crossing(porosities: Sequence[float], fractions: Sequence[float], level: float = 0.5) -> float | None:
    """Linear interpolation of where the (monotone-regularized) curve reaches ``level``.

    The running maximum removes sampling wiggles; an exact hit returns the
    lowest porosity attaining it.
    """
    p = np.asarray(porosities, dtype=np.float64)
    f = np.maximum.accumulate(np.asarray(fractions, dtype=np.float64))
    hits = np.flatnonzero(f >= level)
    if hits.size == 0:
        return None
    i = int(hits[0])
    if f[i] == level:
        return float(p[i])
    if i == 0:
        return None
    t = (level - f[i - 1]) / (f[i] - f[i - 1])
    return float(p[i - 1] + t * (p[i] - p[i - 1]))


def estimate_threshold(dims: GridDims, porosities: Sequence[float], trials: int, master_seed: int,
                       jobs: int = 1, params: LcgParams = DEFAULT_PARAMS) -> ThresholdCurve:
    """Spanning probability per porosity and its 0.5 crossing.

    Trial ``t`` uses the same medium seed at every porosity, so each trial's
    spanning indicator is monotone in porosity.
    """
    if len(porosities) == 0:
        raise ValueError("porosity list is empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ps = np.asarray(porosities, dtype=np.float64)
    if np.any(np.diff(ps) < 0):
        raise ValueError("porosities must be sorted ascending")
    seeds = trial_seeds(master_seed, trials)
    tasks = [(dims, float(p), seeds, params) for p in ps]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            counts = list(pool.map(_count_spanning, tasks))
    else:
        counts = [_count_spanning(t) for t in tasks]
    frac = np.asarray(counts, dtype=np.float64) / trials
    return ThresholdCurve(dims, ps, frac, trials, crossing(ps, frac))


# -- independent reference --------------------------------------------------


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def pore_component(pores: np.ndarray, source: tuple[int, int]) -> np.ndarray:
    """Boolean mask of the 4-connected pore component containing ``source``, via union-find."""
    h, w = pores.shape
    flat = pores.reshape(-1).tolist()
    uf = UnionFind(w * h)
    for y in range(h):
        for x in range(w):
            s = y * w + x
            if not flat[s]:
                continue
            if x + 1 < w and flat[s + 1]:
                uf.union(s, s + 1)
            if y + 1 < h and flat[s + w]:
                uf.union(s, s + w)
    sx, sy = source
    root = uf.find(sy * w + sx)
    mask = [flat[s] and uf.find(s) == root for s in range(w * h)]
    return np.array(mask, dtype=bool).reshape(h, w)


def bfs_distances(pores: np.ndarray, source: tuple[int, int]) -> dict[tuple[int, int], int]:
    """Breadth-first hop distance from ``source`` to every reachable pore."""
    h, w = pores.shape
    dims = GridDims(w, h)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x, y = queue.popleft()
        for nx, ny in neighbors(x, y, dims, BoundaryMode.CLAMPED):
            if pores[ny, nx] and (nx, ny) not in dist:
                dist[(nx, ny)] = dist[(x, y)] + 1
                queue.append((nx, ny))
    return dist
