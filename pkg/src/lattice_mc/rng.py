"""Linear congruential generators and per-site random streams.

Every generator here is the recurrence ``R(n) = (a * R(n-1) + b) mod N`` with a
power-of-two modulus, so the reduction is a bit mask. Stream states are kept
below 2**32 which lets a whole lattice of streams advance in one exact
``uint64`` numpy expression (``a * state + b`` never exceeds 2**64).
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_MASK64 = (1 << 64) - 1
_MAX_MODULUS = 1 << 32


class InsufficientSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class LcgParams:
    """Constants of one LCG family.

    The defaults are the widely used Numerical Recipes constants. They satisfy
    the full-period conditions for a power-of-two modulus (``a % 8 == 5`` and
    odd ``b``), which the constructor enforces.
    """

    a: int = 1664525
    b: int = 1013904223
    n_mod: int = 1 << 32

    def __post_init__(self):
        n = self.n_mod
        if n < 8 or n > _MAX_MODULUS or n & (n - 1):
            raise ValueError(f"n_mod must be a power of two in [8, 2**32], got {n}")
        if not (0 <= self.a < n and 0 <= self.b < n):
            raise ValueError("a and b must lie in [0, n_mod)")
        if self.a % 8 != 5:
            raise ValueError(f"a must satisfy a % 8 == 5 for full period, got a={self.a}")
        if self.b % 2 != 1:
            raise ValueError(f"b must be odd for full period, got b={self.b}")

    @property
    def mask(self) -> int:
        return self.n_mod - 1

    @property
    def bits(self) -> int:
        return self.n_mod.bit_length() - 1


DEFAULT_PARAMS = LcgParams()


@dataclass(frozen=True)
class LcgState:
    params: LcgParams
    state: int

    def __post_init__(self):
        if not 0 <= self.state < self.params.n_mod:
            raise ValueError(f"state {self.state} outside [0, {self.params.n_mod})")

    @classmethod
    def seeded(cls, seed: int, params: LcgParams = DEFAULT_PARAMS) -> "LcgState":
        return cls(params, seed & params.mask)


def lcg_next(state: LcgState) -> tuple[LcgState, int]:
    """Advance one step. Returns the new state and the raw value it produced."""
    p = state.params
    raw = (p.a * state.state + p.b) & p.mask
    return LcgState(p, raw), raw


def to_unit(raw: int, n_mod: int = DEFAULT_PARAMS.n_mod) -> float:
    """Map a raw value onto [0, 1) by division by the modulus."""
    if not 0 <= raw < n_mod:
        raise ValueError(f"raw value {raw} outside [0, {n_mod})")
    return raw / n_mod


def iter_raw(state: LcgState) -> Iterator[int]:
    """Endless raw stream starting after ``state`` (the seed itself is not emitted)."""
    p = state.params
    a, b, mask = p.a, p.b, p.mask
    s = state.state
    while True:
        s = (a * s + b) & mask
        yield s


def iter_unit(state: LcgState) -> Iterator[float]:
    n = float(state.params.n_mod)
    for raw in iter_raw(state):
        yield raw / n


def advance(state: LcgState, k: int) -> LcgState:
    s = state
    for _ in range(k):
        s, _ = lcg_next(s)
    return s


# -- seed mixing ------------------------------------------------------------


def splitmix64(x: int) -> int:
    """64-bit finalizer from SplitMix64 (bijective on 64-bit words)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


_MIX_C1 = np.uint64(0x85EBCA6B)
_MIX_C2 = np.uint64(0xC2B2AE35)


def _bijective_mix(x: np.ndarray, bits: int) -> np.ndarray:
    """Xorshift-multiply finalizer restricted to ``bits``-bit words.

    Each stage (``x ^= x >> s`` and multiplication by an odd constant modulo
    2**bits) is invertible, so distinct inputs stay distinct.
    """
    mask = np.uint64((1 << bits) - 1)
    s1 = np.uint64(max(1, bits // 2))
    s2 = np.uint64(max(1, (bits * 13) // 32))
    x = x & mask
    x ^= x >> s1
    x = (x * _MIX_C1) & mask
    x ^= x >> s2
    x = (x * _MIX_C2) & mask
    x ^= x >> s1
    return x


def mix_seeds(master_seed: int, indices, params: LcgParams = DEFAULT_PARAMS) -> np.ndarray:
    """Per-index seeds: a master-seed dependent rotation, then a bijective mix.

    For a fixed master seed the map ``index -> seed`` is a bijection on
    ``[0, n_mod)``, so up to ``n_mod`` streams are guaranteed pairwise distinct.
    """
    offset = splitmix64(master_seed & _MASK64) & params.mask
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _bijective_mix((idx + np.uint64(offset)) & np.uint64(params.mask), params.bits)


@dataclass
class StreamSet:
    """One LCG stream per lattice site, row-major.

    ``states`` is mutated in place as draws are taken; copy the set (``copy()``)
    to replay the same randomness.
    """

    params: LcgParams
    master_seed: int
    states: np.ndarray

    def __len__(self) -> int:
        return len(self.states)

    def copy(self) -> "StreamSet":
        return StreamSet(self.params, self.master_seed, self.states.copy())

    def stream(self, i: int) -> LcgState:
        return LcgState(self.params, int(self.states[i]))

    def next_raw(self, sites=None) -> np.ndarray:
        """Advance the selected streams (all by default) by one step."""
        a, b, mask = (np.uint64(v) for v in (self.params.a, self.params.b, self.params.mask))
        if sites is None:
            self.states = (self.states * a + b) & mask
            return self.states.copy()
        new = (self.states[sites] * a + b) & mask
        self.states[sites] = new
        return new

    def next_unit(self, sites=None) -> np.ndarray:
        return self.next_raw(sites).astype(np.float64) / float(self.params.n_mod)


def spawn_streams(master_seed: int, count: int, params: LcgParams = DEFAULT_PARAMS) -> StreamSet:
    if count < 1:
        raise ValueError("cannot spawn an empty stream set (count must be >= 1)")
    if count > params.n_mod:
        raise ValueError(f"count {count} exceeds n_mod {params.n_mod}; streams could not be distinct")
    seeds = mix_seeds(master_seed, np.arange(count, dtype=np.uint64), params)
    return StreamSet(params, master_seed, seeds)


# -- statistical checks -----------------------------------------------------


def _unit_source(stream) -> Iterator[float]:
    if isinstance(stream, LcgState):
        return iter_unit(stream)
    return iter(stream)


def estimate_circle_ratio(stream: LcgState | Iterable[float], samples: int) -> float:
    """Fraction of uniform points of the unit square inside the quarter disc.

    Converges to pi/4, the same ratio as a disc inscribed in a square.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if isinstance(stream, LcgState):
        xy = _draw_block(stream, 2 * samples)
        x, y = xy[0::2], xy[1::2]
        return float(np.count_nonzero(x * x + y * y <= 1.0)) / samples
    src = _unit_source(stream)
    inside = 0
    for _ in range(samples):
        x, y = next(src), next(src)
        inside += x * x + y * y <= 1.0
    return inside / samples


def _draw_block(stream: LcgState, count: int) -> np.ndarray:
    """The next ``count`` unit draws of one stream, as an array.

    Uses jump-ahead: with ``A = a**k`` and ``B = b*(a**(k-1)+...+1)`` the
    k-step map is again affine, so 1024 interleaved lanes fill the block.
    """
    p = stream.params
    lanes = min(count, 1024)
    # seeds of each lane: the first `lanes` outputs, generated sequentially
    first = np.empty(lanes, dtype=np.uint64)
    s = stream.state
    for i in range(lanes):
        s = (p.a * s + p.b) & p.mask
        first[i] = s
    a_k, b_k = 1, 0
    for _ in range(lanes):
        a_k, b_k = (a_k * p.a) & p.mask, (b_k * p.a + p.b) & p.mask
    rows = -(-count // lanes)
    out = np.empty((rows, lanes), dtype=np.uint64)
    out[0] = first
    A, B, M = np.uint64(a_k), np.uint64(b_k), np.uint64(p.mask)
    with np.errstate(over="ignore"):
        for r in range(1, rows):
            # a_k < 2**32 and state < 2**32, so wraparound only discards bits above the mask
            out[r] = (out[r - 1] * A + B) & M
    return out.ravel()[:count].astype(np.float64) / float(p.n_mod)


def chi_square_uniformity(stream: LcgState | Iterable[float], samples: int, bins: int) -> float:
    """Pearson chi-square of ``samples`` draws against a flat histogram on [0, 1)."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if samples < 10 * bins:
        raise InsufficientSamplesError(
            f"need at least 10 samples per bin ({10 * bins}), got {samples}")
    if isinstance(stream, LcgState):
        draws = _draw_block(stream, samples)
    else:
        src = _unit_source(stream)
        draws = np.fromiter((next(src) for _ in range(samples)), dtype=np.float64, count=samples)
    idx = np.minimum((draws * bins).astype(np.int64), bins - 1)
    observed = np.bincount(idx, minlength=bins)
    expected = samples / bins
    return float(((observed - expected) ** 2).sum() / expected)


def binomial_sigma(q: float, n: int) -> float:
    return math.sqrt(q * (1.0 - q) / n)


def export_pairs(stream: LcgState, count: int, path) -> Path:
    """Write ``count`` consecutive (x, y) draw pairs as ``x y`` lines.

    Meant for eyeballing the lattice structure of LCG tuples in a scatter plot.
    """
    path = Path(path)
    src = iter_unit(stream)
    with path.open("w") as fh:
        for _ in range(count):
            fh.write(f"{next(src)!r} {next(src)!r}\n")
    return path
