"""2D grids: checkerboard coloring, neighbor lookup, edge buffers and PPM output.

Cells are stored row-major in a numpy array of shape ``(height, width, ...)``
with ``y`` growing downward, the same orientation as the image files.
"""

from __future__ import annotations

import enum
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class Color(enum.Enum):
    BLACK = 0
    WHITE = 1

    def other(self) -> "Color":
        return Color.WHITE if self is Color.BLACK else Color.BLACK


class BoundaryMode(enum.Enum):
    PERIODIC = "periodic"
    CLAMPED = "clamped"


@dataclass(frozen=True)
class GridDims:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.width}x{self.height}")

    @property
    def sites(self) -> int:
        return self.width * self.height

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def boundary_size(self) -> int:
        return 2 * (self.width + self.height) - 4

    @classmethod
    def parse(cls, text: str) -> "GridDims":
        """Parse ``"WxH"`` (or a single ``"N"`` for a square grid)."""
        parts = text.lower().split("x")
        try:
            if len(parts) == 1:
                return cls(int(parts[0]), int(parts[0]))
            if len(parts) == 2:
                return cls(int(parts[0]), int(parts[1]))
        except ValueError:
            pass
        raise ValueError(f"dims must look like WIDTHxHEIGHT, got {text!r}")

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"

    def index(self, x: int, y: int) -> int:
        self.check(x, y)
        return y * self.width + x

    def coords(self, s: int) -> tuple[int, int]:
        if not 0 <= s < self.sites:
            raise IndexError(f"site index {s} out of range for {self}")
        return s % self.width, s // self.width

    def check(self, x: int, y: int) -> None:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise IndexError(f"site ({x}, {y}) outside {self}")


def check_mode(dims: GridDims, mode: BoundaryMode) -> None:
    """Periodic wrapping only keeps the checkerboard consistent for even sizes."""
    if mode is BoundaryMode.PERIODIC and (dims.width % 2 or dims.height % 2):
        raise ValueError(f"periodic boundaries need even width and height, got {dims}")


@dataclass
class Grid:
    dims: GridDims
    cells: np.ndarray

    def __post_init__(self):
        if self.cells.shape[:2] != self.dims.shape:
            raise ValueError(f"cells shape {self.cells.shape} does not match {self.dims}")

    def copy(self) -> "Grid":
        return Grid(self.dims, self.cells.copy())

    def __getitem__(self, xy):
        x, y = xy
        return self.cells[y, x]

    def __setitem__(self, xy, value):
        x, y = xy
        self.cells[y, x] = value


def new_grid(dims: GridDims, fill, dtype=None, lanes: int | None = None) -> Grid:
    shape = dims.shape if lanes is None else dims.shape + (lanes,)
    return Grid(dims, np.full(shape, fill, dtype=dtype))


def parity(x: int, y: int, dims: GridDims) -> Color:
    dims.check(x, y)
    return Color.BLACK if (x + y) % 2 == 0 else Color.WHITE


def color_mask(dims: GridDims, color: Color) -> np.ndarray:
    y, x = np.indices(dims.shape)
    return (x + y) % 2 == color.value


def color_sites(dims: GridDims, color: Color) -> np.ndarray:
    """Row-major flat indices of every site with the given color."""
    return np.flatnonzero(color_mask(dims, color))


def neighbors(x: int, y: int, dims: GridDims, mode: BoundaryMode) -> list[tuple[int, int]]:
    """Nearest neighbors in N, E, S, W order.

    Periodic always yields four entries (possibly repeated on 2-wide grids);
    clamped drops the ones that fall off the edge.
    """
    dims.check(x, y)
    w, h = dims.width, dims.height
    steps = ((0, -1), (1, 0), (0, 1), (-1, 0))
    if mode is BoundaryMode.PERIODIC:
        return [((x + dx) % w, (y + dy) % h) for dx, dy in steps]
    return [(x + dx, y + dy) for dx, dy in steps if 0 <= x + dx < w and 0 <= y + dy < h]


def neighbor_table(dims: GridDims, mode: BoundaryMode) -> list[list[int]]:
    """Flat-index neighbor lists for every site (N, E, S, W order)."""
    return [
        [dims.index(nx, ny) for nx, ny in neighbors(*dims.coords(s), dims, mode)]
        for s in range(dims.sites)
    ]


def neighbor_sum(cells: np.ndarray, mode: BoundaryMode) -> np.ndarray:
    """Sum of the four neighbor values at every site, whole-array."""
    if mode is BoundaryMode.PERIODIC:
        return (np.roll(cells, 1, axis=0) + np.roll(cells, -1, axis=0)
                + np.roll(cells, 1, axis=1) + np.roll(cells, -1, axis=1))
    out = np.zeros_like(cells)
    out[1:, :] += cells[:-1, :]
    out[:-1, :] += cells[1:, :]
    out[:, 1:] += cells[:, :-1]
    out[:, :-1] += cells[:, 1:]
    return out


# -- boundary buffers -------------------------------------------------------


def boundary_coords(dims: GridDims) -> tuple[np.ndarray, np.ndarray]:
    """(ys, xs) of the edge cells, clockwise from (0, 0).

    Top row left to right, right column downward, bottom row right to left,
    left column upward.
    """
    w, h = dims.width, dims.height
    xs = np.concatenate([
        np.arange(w),
        np.full(h - 1, w - 1),
        np.arange(w - 2, -1, -1),
        np.zeros(h - 2, dtype=int),
    ])
    ys = np.concatenate([
        np.zeros(w, dtype=int),
        np.arange(1, h),
        np.full(w - 1, h - 1),
        np.arange(h - 2, 0, -1),
    ])
    return ys, xs


@dataclass
class BoundaryBuffer:
    dims: GridDims
    cells: np.ndarray

    def __post_init__(self):
        if len(self.cells) != self.dims.boundary_size:
            raise ValueError(
                f"boundary of {self.dims} holds {self.dims.boundary_size} cells, got {len(self.cells)}")


def extract_boundary(grid: Grid, out: np.ndarray | None = None) -> BoundaryBuffer:
    ys, xs = boundary_coords(grid.dims)
    if out is None:
        return BoundaryBuffer(grid.dims, grid.cells[ys, xs])
    out[...] = grid.cells[ys, xs]
    return BoundaryBuffer(grid.dims, out)


def inject_boundary(grid: Grid, buffer: BoundaryBuffer) -> Grid:
    """Overwrite the edge cells of ``grid`` in place and return it."""
    if buffer.dims != grid.dims:
        raise ValueError(f"buffer dims {buffer.dims} do not match grid dims {grid.dims}")
    ys, xs = boundary_coords(grid.dims)
    grid.cells[ys, xs] = buffer.cells
    return grid


# -- snapshots --------------------------------------------------------------

Palette = Mapping[object, tuple[int, int, int]] | Callable[[object], tuple[int, int, int]]


def export_image(grid: Grid, palette: Palette, path) -> Path:
    """Write the grid as a binary PPM (P6), row 0 at the top."""
    cells = grid.cells
    values = np.unique(cells)
    lut = {}
    for v in values.tolist():
        try:
            rgb = palette(v) if callable(palette) else palette[v]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"palette has no color for cell value {v!r}") from exc
        lut[v] = rgb
    rgb_img = np.empty(cells.shape + (3,), dtype=np.uint8)
    for v, rgb in lut.items():
        rgb_img[cells == v] = rgb
    path = Path(path)
    h, w = cells.shape[:2]
    with path.open("wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb_img.tobytes())
    return path


def read_ppm(path) -> tuple[int, int, bytes]:
    """Read back a P6 file written by :func:`export_image`."""
    data = Path(path).read_bytes()
    magic, size, maxval, rest = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not an 8-bit binary PPM")
    w, h = (int(t) for t in size.split())
    return w, h, rest
