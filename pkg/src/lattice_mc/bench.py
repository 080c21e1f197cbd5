"""Micro-benchmarks for whole-lattice vector operations and buffer transfers.

Each lattice site carries four 32-bit floats, so a ``w x h`` lattice is a
vector of ``4*w*h`` elements. The ``a = c`` assignment is timed as a baseline
carrying the fixed per-pass overhead; subtracting it from ``a op= c`` or
``a = f(a)`` isolates the marginal cost of the operation itself.

Timing uses ``time.perf_counter_ns`` only. One warm-up repetition runs on a
scratch copy and is discarded; records keep the median of the timed ones.
"""

from __future__ import annotations

import enum
import math
import statistics
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numba
import numpy as np

from .lattice import BoundaryBuffer, Grid, GridDims, boundary_coords, extract_boundary, inject_boundary

LANES = 4
ELEMENT_BYTES = 4


class OpKind(enum.Enum):
    ASSIGN = "="
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"
    SIN = "sin"
    COS = "cos"
    LOG = "log"
    EXP = "exp"

    @property
    def transcendental(self) -> bool:
        return self in (OpKind.SIN, OpKind.COS, OpKind.LOG, OpKind.EXP)

    @classmethod
    def parse(cls, text: str) -> "OpKind":
        try:
            return cls[text.upper()]
        except KeyError:
            raise ValueError(f"unknown op {text!r}; choose from "
                             f"{', '.join(k.name.lower() for k in cls)}") from None


class BenchBackend(enum.Enum):
    SCALAR = "scalar"
    DATA_PARALLEL = "data-parallel"


class TransferMode(enum.Enum):
    BOUNDARY_READ = "read-bdr"
    BOUNDARY_WRITE = "write-bdr"
    FULL_READ = "read-all"
    FULL_WRITE = "write-all"

    @property
    def boundary(self) -> bool:
        return self in (TransferMode.BOUNDARY_READ, TransferMode.BOUNDARY_WRITE)


# iterating log or exp in place leaves the finite range within a few passes,
# so those ops restart from the initial fill before every (untimed) rep
_RESET_EACH_REP = (OpKind.LOG, OpKind.EXP)


@dataclass(frozen=True)
class BenchRecord:
    op: OpKind
    dims: GridDims
    backend: BenchBackend
    reps: int
    total_s: float
    median_s: float
    checksum: float
    lanes_per_site: int = LANES

    @property
    def elements(self) -> int:
        return self.dims.sites * self.lanes_per_site


@dataclass(frozen=True)
class IncrementalCost:
    op: OpKind
    dims: GridDims
    backend: BenchBackend
    incremental_s: float
    elements: int

    @property
    def reliable(self) -> bool:
        return self.incremental_s > 0

    @property
    def throughput(self) -> float | None:
        return self.elements / self.incremental_s if self.reliable else None


@dataclass(frozen=True)
class TransferRecord:
    dims: GridDims
    mode: TransferMode
    reps: int
    bytes_moved: int
    median_s: float

    @property
    def rate_mb_s(self) -> float:
        return self.bytes_moved / self.median_s / 1e6


def transfer_bytes(dims: GridDims, boundary: bool) -> int:
    sites = dims.boundary_size if boundary else dims.sites
    return sites * LANES * ELEMENT_BYTES


# -- kernels ----------------------------------------------------------------

_NP_UNARY = {OpKind.SIN: np.sin, OpKind.COS: np.cos, OpKind.LOG: np.log, OpKind.EXP: np.exp}


def _np_kernel(op: OpKind, a: np.ndarray, c: np.float32) -> None:
    if op is OpKind.ASSIGN:
        a.fill(c)
    elif op is OpKind.ADD:
        a += c
    elif op is OpKind.SUB:
        a -= c
    elif op is OpKind.MUL:
        a *= c
    elif op is OpKind.DIV:
        a /= c
    else:
        _NP_UNARY[op](a, out=a)


@numba.njit(cache=True)
def _loop_assign(a, c):
    for i in range(a.shape[0]):
        a[i] = c


@numba.njit(cache=True)
def _loop_add(a, c):
    for i in range(a.shape[0]):
        a[i] += c


@numba.njit(cache=True)
def _loop_sub(a, c):
    for i in range(a.shape[0]):
        a[i] -= c


@numba.njit(cache=True)
def _loop_mul(a, c):
    for i in range(a.shape[0]):
        a[i] *= c


@numba.njit(cache=True)
def _loop_div(a, c):
    for i in range(a.shape[0]):
        a[i] /= c


@numba.njit(cache=True)
def _loop_sin(a, c):
    for i in range(a.shape[0]):
        a[i] = math.sin(a[i])


@numba.njit(cache=True)
def _loop_cos(a, c):
    for i in range(a.shape[0]):
        a[i] = math.cos(a[i])


@numba.njit(cache=True)
def _loop_log(a, c):
    for i in range(a.shape[0]):
        a[i] = math.log(a[i])


@numba.njit(cache=True)
def _loop_exp(a, c):
    for i in range(a.shape[0]):
        a[i] = math.exp(a[i])


# compiled element-at-a-time loops, the analog of optimized CPU code
_SCALAR_LOOPS = {
    OpKind.ASSIGN: _loop_assign, OpKind.ADD: _loop_add, OpKind.SUB: _loop_sub,
    OpKind.MUL: _loop_mul, OpKind.DIV: _loop_div, OpKind.SIN: _loop_sin,
    OpKind.COS: _loop_cos, OpKind.LOG: _loop_log, OpKind.EXP: _loop_exp,
}


def _scalar_kernel(op: OpKind, a: np.ndarray, c: np.float32) -> None:
    _SCALAR_LOOPS[op](a, c)


def default_init(op: OpKind) -> float:
    # log needs a positive argument
    return 1.0 if op is OpKind.LOG else 0.0


def expected_checksum(op: OpKind, elements: int, reps: int, c: float = 1.0, init: float | None = None) -> float:
    """Closed-form sum of the result array, iterating the op on one float32 value."""
    x = np.float32(default_init(op) if init is None else init)
    cc = np.float32(c)
    n_apply = 1 if op in _RESET_EACH_REP else reps
    with np.errstate(all="ignore"):
        for _ in range(n_apply):
            a = np.array([x], dtype=np.float32)
            _np_kernel(op, a, cc)
            x = a[0]
    return float(x) * elements


def run_vector_bench(op: OpKind, dims: GridDims, reps: int,
                     backend: BenchBackend = BenchBackend.DATA_PARALLEL,
                     c: float = 1.0, init: float | None = None) -> BenchRecord:
    """Time ``reps`` in-place passes of ``op`` over a ``dims x 4`` float32 vector."""
    if reps < 3:
        raise ValueError(f"reps must be >= 3, got {reps}")
    n = dims.sites * LANES
    x0 = default_init(op) if init is None else init
    kernel = _np_kernel if backend is BenchBackend.DATA_PARALLEL else _scalar_kernel
    a = np.full(n, x0, dtype=np.float32)
    cc = np.float32(c)
    with np.errstate(all="ignore"):
        # warm-up on a scratch vector (also triggers JIT compilation)
        kernel(op, np.full(n, x0, dtype=np.float32), cc)
        times = []
        for _ in range(reps):
            if op in _RESET_EACH_REP:
                a.fill(x0)
            t0 = time.perf_counter_ns()
            kernel(op, a, cc)
            times.append(time.perf_counter_ns() - t0)
    checksum = float(a.sum(dtype=np.float64))
    secs = [t / 1e9 for t in times]
    return BenchRecord(op, dims, backend, reps, sum(secs), statistics.median(secs), checksum)


def baseline_subtract(records: Iterable[BenchRecord]) -> list[IncrementalCost]:
    """Per-record median minus the ASSIGN median of the same dims and backend.

    Non-positive differences are kept; they come out with ``reliable == False``.
    """
    records = list(records)
    base = {(r.dims, r.backend): r.median_s for r in records if r.op is OpKind.ASSIGN}
    out = []
    for r in records:
        key = (r.dims, r.backend)
        if key not in base:
            raise ValueError(f"no ASSIGN baseline for {r.dims} on {r.backend.value}")
        out.append(IncrementalCost(r.op, r.dims, r.backend, r.median_s - base[key], r.elements))
    return out


def flops(elements: int, ops_per_element: int, seconds: float) -> float:
    if not seconds > 0:
        raise ValueError(f"time must be positive, got {seconds}")
    if ops_per_element < 1:
        raise ValueError("ops_per_element must be >= 1")
    return elements * ops_per_element / seconds


def derive_flops(incremental: IncrementalCost, ops_per_element: int = 1) -> float:
    return flops(incremental.elements, ops_per_element, incremental.incremental_s)


# -- transfers --------------------------------------------------------------


def run_transfer_bench(dims: GridDims, mode: TransferMode, reps: int) -> TransferRecord:
    """Copy a lattice (or its edge ring) between two separate allocations.

    An in-host stand-in for CPU<->device traffic: "read" copies from the
    simulation grid out to a host buffer, "write" copies a host buffer in.
    """
    if reps < 3:
        raise ValueError(f"reps must be >= 3, got {reps}")
    src = Grid(dims, np.arange(dims.sites * LANES, dtype=np.float32).reshape(dims.shape + (LANES,)))
    host = Grid(dims, np.zeros_like(src.cells))
    ring = np.zeros((dims.boundary_size, LANES), dtype=np.float32)

    if mode is TransferMode.BOUNDARY_READ:
        def once():
            extract_boundary(src, out=ring)
    elif mode is TransferMode.BOUNDARY_WRITE:
        payload = extract_boundary(src)

        def once():
            inject_boundary(host, payload)
    elif mode is TransferMode.FULL_READ:
        def once():
            np.copyto(host.cells, src.cells)
    else:
        def once():
            np.copyto(src.cells, host.cells)

    once()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        once()
        times.append(time.perf_counter_ns() - t0)
    med = statistics.median(times) / 1e9
    return TransferRecord(dims, mode, reps, transfer_bytes(dims, mode.boundary), max(med, 1e-9))


def transfer_roundtrip(grid: Grid, boundary: bool) -> Grid:
    """Copy out then back into a fresh allocation; used to check the pathways are lossless."""
    if boundary:
        buf = BoundaryBuffer(grid.dims, extract_boundary(grid).cells.copy())
        target = grid.copy()
        target.cells[boundary_coords(grid.dims)] = 0
        return inject_boundary(target, buf)
    host = np.empty_like(grid.cells)
    np.copyto(host, grid.cells)
    back = Grid(grid.dims, np.empty_like(grid.cells))
    np.copyto(back.cells, host)
    return back


# -- tables -----------------------------------------------------------------

_OP_ORDER = {op: i for i, op in enumerate(OpKind)}
COLUMNS = ("op", "backend", "width", "height", "reps", "median_s", "incr_s", "throughput")


def _rows(records: Sequence[BenchRecord]) -> list[tuple]:
    has_base = {(r.dims, r.backend) for r in records if r.op is OpKind.ASSIGN}
    incr = {}
    usable = [r for r in records if (r.dims, r.backend) in has_base]
    for r, ic in zip(usable, baseline_subtract(usable)):
        incr[id(r)] = ic
    ordered = sorted(records, key=lambda r: (_OP_ORDER[r.op], r.dims.sites, r.dims.width,
                                             r.dims.height, r.backend.value))
    rows = []
    for r in ordered:
        ic = incr.get(id(r))
        incr_s = "" if ic is None else f"{ic.incremental_s:.6e}"
        thr = "" if ic is None or ic.throughput is None else f"{ic.throughput:.4e}"
        rows.append((r.op.name.lower(), r.backend.value, r.dims.width, r.dims.height, r.reps,
                     f"{r.median_s:.6e}", incr_s, thr))
    return rows


def emit_table(records: Sequence[BenchRecord], fmt: str = "csv") -> str:
    if not records:
        raise ValueError("no benchmark records to format")
    rows = _rows(records)
    if fmt == "csv":
        lines = [",".join(COLUMNS)] + [",".join(str(v) for v in row) for row in rows]
    elif fmt == "markdown":
        lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
        lines += ["| " + " | ".join(str(v) for v in row) + " |" for row in rows]
    else:
        raise ValueError(f"unknown table format {fmt!r} (csv or markdown)")
    return "\n".join(lines) + "\n"


def emit_transfer_table(records: Sequence[TransferRecord]) -> str:
    lines = ["mode,width,height,reps,bytes,median_s,rate_mb_s,note"]
    for r in sorted(records, key=lambda r: (r.mode.value, r.dims.sites)):
        lines.append(f"{r.mode.value},{r.dims.width},{r.dims.height},{r.reps},{r.bytes_moved},"
                     f"{r.median_s:.6e},{r.rate_mb_s:.1f},in-host analog")
    return "\n".join(lines) + "\n"
