"""Command-line front end: ``ising``, ``percolation``, ``bench`` and ``rng-test``.

Parameters resolve as built-in defaults < ``--config`` file < command-line
flags. Every run writes exactly one ``.manifest`` file (flat ``key=value``)
listing the resolved parameters and every artifact written. A manifest can be
passed back through ``--config`` to repeat the run.

Exit codes: 0 success, 1 invalid usage or parameters, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import bench, ising, percolation, rng
from .lattice import BoundaryMode, GridDims, export_image

SEED_ENV = "LATTICE_MC_SEED"
# keys a manifest carries besides parameters; accepted (and ignored) by load_config
MANIFEST_META = ("verb", "version", "started", "finished", "artifact")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class Param:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


def _seed(text: str) -> int:
    return int(text, 0)


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    return float(text)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _dims_list(text: str) -> list[GridDims]:
    return [GridDims.parse(t) for t in text.split(",") if t]


ISING_PARAMS = [
    Param("dims", GridDims.parse, "64x64", "lattice size WIDTHxHEIGHT"),
    Param("kt", _float, 2.0, "temperature k*T in units of the coupling (must be > 0)"),
    Param("p_up", _float, 0.5, "probability of an up spin in the initial state"),
    Param("sweeps", _int, 1000, "number of full (black + white) sweeps"),
    Param("burn_in", _int, 0, "sweeps discarded before averaging"),
    Param("backend", _choice("scalar", "data-parallel"), "data-parallel", "sweep implementation"),
    Param("boundary", _choice("periodic", "clamped"), "periodic", "boundary condition"),
    Param("snapshot_every", _int, 0, "write a PPM every k sweeps (0: final lattice only)"),
]
PERC_VISUAL_PARAMS = [
    Param("dims", GridDims.parse, "128x128", "medium size WIDTHxHEIGHT"),
    Param("porosity", _float, 0.6, "probability that a site is a pore"),
    Param("source", str, "center", "invasion point as X,Y or 'center'"),
    Param("snapshot_every", _int, 0, "write a PPM every k growth steps (0: final only)"),
]
PERC_THRESHOLD_PARAMS = [
    Param("dims", GridDims.parse, "128x128", "medium size WIDTHxHEIGHT"),
    Param("p_min", _float, 0.55, "lowest porosity"),
    Param("p_max", _float, 0.65, "highest porosity"),
    Param("p_step", _float, 0.01, "porosity grid spacing"),
    Param("trials", _int, 200, "media per porosity"),
    Param("jobs", _int, 1, "worker processes"),
]
BENCH_PARAMS = [
    Param("ops", str, "all", "comma-separated ops (assign,add,sub,mul,div,sin,cos,log,exp) or 'all'"),
    Param("dims", _dims_list, "256x256,512x512", "comma-separated lattice sizes"),
    Param("reps", _int, 11, "timed repetitions per measurement (>= 3)"),
    Param("backend", _choice("scalar", "data-parallel", "both"), "data-parallel", "kernel implementation"),
    Param("format", _choice("csv", "markdown"), "csv", "table format"),
    Param("transfer", _choice("yes", "no"), "no", "also time boundary/full buffer copies"),
]
RNG_PARAMS = [
    Param("samples", _int, 1_000_000, "points for the circle-ratio estimate"),
    Param("bins", _int, 16, "histogram bins for the chi-square statistic"),
    Param("chi_samples", _int, 16000, "draws for the chi-square statistic"),
    Param("pairs", _int, 0, "also export this many (x, y) draw pairs for a scatter plot"),
]
COMMON_PARAMS = [
    Param("out", str, "out", "output directory"),
]

VERBS: dict[str, list[Param]] = {
    "ising": ISING_PARAMS,
    "percolation-visual": PERC_VISUAL_PARAMS,
    "percolation-threshold": PERC_THRESHOLD_PARAMS,
    "bench": BENCH_PARAMS,
    "rng-test": RNG_PARAMS,
}
SEEDED = {"ising", "percolation-visual", "percolation-threshold", "rng-test"}


# -- config -----------------------------------------------------------------


def load_config(path, params: list[Param], verb: str | None = None) -> dict[str, Any]:
    """Parse a flat ``key=value`` file; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    known = {p.name: p for p in params}
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "verb" and verb is not None and value != verb:
            raise UsageError(f"{path}: manifest is for verb {value!r}, not {verb!r}")
        if key in MANIFEST_META:
            continue
        if key == "seed":
            out["seed"] = _parse_value("seed", _seed, value, f"{path}:{lineno}")
            continue
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, known[key].parse, value, f"{path}:{lineno}")
    return out


def _parse_value(name: str, parse, value: str, where: str):
    try:
        return parse(value)
    except ValueError as exc:
        raise UsageError(f"{where}: bad value for {name}: {exc}") from None


# -- parser -----------------------------------------------------------------


def _add_params(p: argparse.ArgumentParser, params: list[Param], seeded: bool) -> None:
    for prm in params + COMMON_PARAMS:
        p.add_argument(prm.flag, dest=prm.name, default=argparse.SUPPRESS, metavar=prm.name.upper(),
                       help=f"{prm.help} (default: {prm.default})")
    if seeded:
        p.add_argument("--seed", default=argparse.SUPPRESS,
                       help=f"master seed (default: ${SEED_ENV}; required one way or the other)")
    p.add_argument("--config", default=argparse.SUPPRESS,
                   help="flat key=value parameter file; flags override it (default: none)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lattice-mc", description="Lattice Monte Carlo simulations and micro-benchmarks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", metavar="VERB", parser_class=_Parser)
    sub.required = True
    _add_params(sub.add_parser("ising", help="checkerboard Metropolis Ising run"), ISING_PARAMS, True)
    perc = sub.add_parser("percolation", help="porous-medium invasion and threshold estimation")
    psub = perc.add_subparsers(dest="mode", metavar="MODE", parser_class=_Parser)
    psub.required = True
    _add_params(psub.add_parser("visual", help="single-source invasion with snapshots"),
                PERC_VISUAL_PARAMS, True)
    _add_params(psub.add_parser("threshold", help="spanning-probability curve and 0.5 crossing"),
                PERC_THRESHOLD_PARAMS, True)
    _add_params(sub.add_parser("bench", help="vector-operation and transfer micro-benchmarks"),
                BENCH_PARAMS, False)
    _add_params(sub.add_parser("rng-test", help="LCG circle-ratio and chi-square checks"), RNG_PARAMS, True)
    return parser


def resolve(ns: argparse.Namespace, verb: str) -> dict[str, Any]:
    params = VERBS[verb] + COMMON_PARAMS
    resolved: dict[str, Any] = {}
    for p in params:
        resolved[p.name] = p.parse(p.default) if isinstance(p.default, str) else p.default
    given = vars(ns)
    if "config" in given:
        resolved.update(load_config(given["config"], params, verb))
    for p in params:
        if p.name in given:
            resolved[p.name] = _parse_value(p.name, p.parse, given[p.name], p.flag)
    if verb in SEEDED:
        if "seed" in given:
            resolved["seed"] = _parse_value("seed", _seed, given["seed"], "--seed")
        elif "seed" not in resolved:
            env = os.environ.get(SEED_ENV)
            if env is None:
                raise UsageError(f"no seed: pass --seed or set {SEED_ENV}")
            resolved["seed"] = _parse_value("seed", _seed, env, SEED_ENV)
    else:
        resolved.pop("seed", None)
    return resolved


# -- outputs ----------------------------------------------------------------


class RunOutput:
    """Tracks files written by a run and emits the manifest."""

    def __init__(self, verb: str, params: dict[str, Any], stem: str, manifest_stem: str | None = None):
        self.verb = verb
        self.params = params
        self.out = Path(params["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.stem = stem
        self.manifest_stem = manifest_stem or stem
        self.artifacts: list[Path] = []
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    def path(self, suffix: str) -> Path:
        p = self.out / f"{self.stem}{suffix}"
        self.artifacts.append(p)
        return p

    def snapshot_path(self, step: int) -> Path:
        return self.path(f"_{step:06d}.ppm")

    def write_manifest(self) -> Path:
        finished = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        path = self.out / f"{self.manifest_stem}.manifest"
        lines = [f"verb={self.verb}", f"version={__version__}"]
        lines += [f"{k}={_fmt(v)}" for k, v in self.params.items()]
        lines += [f"artifact={a}" for a in self.artifacts]
        lines += [f"started={self.started}", f"finished={finished}"]
        path.write_text("\n".join(lines) + "\n")
        return path


def _fmt(v: Any) -> str:
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    return str(v)


# -- verbs ------------------------------------------------------------------


def _ising(p: dict[str, Any]) -> Callable[[], None]:
    cfg = ising.IsingConfig(
        dims=p["dims"], kT=p["kt"], p_up=p["p_up"], sweeps=p["sweeps"], burn_in=p["burn_in"],
        master_seed=p["seed"], backend=ising.Backend(p["backend"]), mode=BoundaryMode(p["boundary"]))
    if p["snapshot_every"] < 0:
        raise ValueError("snapshot_every must be >= 0")

    def go():
        run = RunOutput("ising", p, f"ising_{p['seed']}")
        every = p["snapshot_every"]

        def snap(k, state):
            if (every and k % every == 0) or k == cfg.sweeps:
                export_image(state.lattice, ising.SPIN_PALETTE, run.snapshot_path(k))

        result = ising.run(cfg, on_sweep=snap)
        run.path(".csv").write_text(result.series.to_csv())
        run.write_manifest()
        n = cfg.dims.sites
        print(f"expected_energy,{result.expected_energy:.6f}")
        print(f"expected_magnetization,{result.expected_magnetization:.6f}")
        print(f"abs_magnetization_per_site,{abs(result.expected_magnetization) / n:.6f}")
    return go


def _parse_source(text: str, dims: GridDims) -> tuple[int, int]:
    if text == "center":
        return dims.width // 2, dims.height // 2
    try:
        x, y = (int(t) for t in text.split(","))
    except ValueError:
        raise ValueError(f"source must be X,Y or 'center', got {text!r}") from None
    dims.check(x, y)
    return x, y


def _perc_visual(p: dict[str, Any]) -> Callable[[], None]:
    dims = p["dims"]
    source = _parse_source(p["source"], dims)
    if not 0.0 <= p["porosity"] <= 1.0:
        raise ValueError(f"porosity must lie in [0, 1], got {p['porosity']}")
    if p["snapshot_every"] < 0:
        raise ValueError("snapshot_every must be >= 0")

    def go():
        run = RunOutput("percolation-visual", p, f"percolation_{p['seed']}",
                        f"percolation_{p['seed']}_visual")
        medium = percolation.generate_medium(dims, p["porosity"], p["seed"])
        every = p["snapshot_every"]

        def snap(k, cluster):
            if every and k % every == 0:
                export_image(percolation.composite(medium, cluster), percolation.MEDIUM_PALETTE,
                             run.snapshot_path(k))

        cluster, steps, spanned = percolation.run_invasion(medium, source, on_step=snap)
        if not every or steps % every:
            export_image(percolation.composite(medium, cluster), percolation.MEDIUM_PALETTE,
                         run.snapshot_path(steps))
        lines = ["step,newly_invaded"] + [f"{i + 1},{n}" for i, n in enumerate(cluster.history)]
        run.path("_steps.csv").write_text("\n".join(lines) + "\n")
        run.write_manifest()
        print(f"steps,{steps}")
        print(f"invaded,{int(cluster.invaded.sum())}")
        print(f"spans_vertical,{int(spanned)}")
        print(f"spans_horizontal,{int(percolation.spans(cluster, dims, percolation.Axis.HORIZONTAL))}")
    return go


def porosity_grid(p_min: float, p_max: float, p_step: float) -> list[float]:
    if p_step <= 0:
        raise ValueError("p_step must be > 0")
    if not 0.0 <= p_min <= p_max <= 1.0:
        raise ValueError("need 0 <= p_min <= p_max <= 1")
    n = int(np.floor((p_max - p_min) / p_step + 1e-9)) + 1
    return [round(p_min + i * p_step, 10) for i in range(n)]


def _perc_threshold(p: dict[str, Any]) -> Callable[[], None]:
    grid = porosity_grid(p["p_min"], p["p_max"], p["p_step"])
    if p["trials"] < 1:
        raise ValueError("trials must be >= 1")
    if p["jobs"] < 1:
        raise ValueError("jobs must be >= 1")

    def go():
        run = RunOutput("percolation-threshold", p, f"percolation_{p['seed']}_threshold")
        curve = percolation.estimate_threshold(p["dims"], grid, p["trials"], p["seed"], jobs=p["jobs"])
        text = curve.to_csv()
        run.path(".csv").write_text(text)
        run.write_manifest()
        sys.stdout.write(text)
    return go


def _bench(p: dict[str, Any]) -> Callable[[], None]:
    ops = list(bench.OpKind) if p["ops"] == "all" else [bench.OpKind.parse(t) for t in p["ops"].split(",")]
    if bench.OpKind.ASSIGN not in ops:
        ops.insert(0, bench.OpKind.ASSIGN)
    if p["reps"] < 3:
        raise ValueError(f"reps must be >= 3, got {p['reps']}")
    if not p["dims"]:
        raise ValueError("dims list is empty")
    backends = list(bench.BenchBackend) if p["backend"] == "both" else [bench.BenchBackend(p["backend"])]

    def go():
        run = RunOutput("bench", p, "bench")
        records = [bench.run_vector_bench(op, d, p["reps"], b) for b in backends for d in p["dims"] for op in ops]
        text = bench.emit_table(records, p["format"])
        run.path(".csv" if p["format"] == "csv" else ".md").write_text(text)
        sys.stdout.write(text)
        sums = ",".join(f"{r.checksum:.6g}" for r in records)
        print(f"# checksums {sums}")
        if p["transfer"] == "yes":
            trs = [bench.run_transfer_bench(d, m, p["reps"]) for d in p["dims"] for m in bench.TransferMode]
            ttext = bench.emit_transfer_table(trs)
            run.path("_transfer.csv").write_text(ttext)
            sys.stdout.write(ttext)
        run.write_manifest()
    return go


def _rng_test(p: dict[str, Any]) -> Callable[[], None]:
    if p["samples"] < 1:
        raise ValueError("samples must be >= 1")
    if p["bins"] < 1 or p["chi_samples"] < 10 * p["bins"]:
        raise ValueError("chi_samples must be at least 10 * bins")
    if p["pairs"] < 0:
        raise ValueError("pairs must be >= 0")

    def go():
        run = RunOutput("rng-test", p, f"rng-test_{p['seed']}")
        streams = rng.spawn_streams(p["seed"], 2)
        circle = rng.estimate_circle_ratio(streams.stream(0), p["samples"])
        chi2 = rng.chi_square_uniformity(streams.stream(1), p["chi_samples"], p["bins"])
        text = (f"metric,samples,value\n"
                f"circle_ratio,{p['samples']},{circle:.8f}\n"
                f"chi_square_{p['bins']}_bins,{p['chi_samples']},{chi2:.6f}\n")
        run.path(".csv").write_text(text)
        if p["pairs"]:
            rng.export_pairs(streams.stream(0), p["pairs"], run.path("_pairs.txt"))
        run.write_manifest()
        sys.stdout.write(text)
    return go


_HANDLERS = {
    "ising": _ising,
    "percolation-visual": _perc_visual,
    "percolation-threshold": _perc_threshold,
    "bench": _bench,
    "rng-test": _rng_test,
}


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    verb = ns.verb if ns.verb != "percolation" else f"percolation-{ns.mode}"
    args = argparse.Namespace(**{k: v for k, v in vars(ns).items() if k not in ("verb", "mode")})
    try:
        params = resolve(args, verb)
        job = _HANDLERS[verb](params)
    except (UsageError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        job()
    except Exception as exc:  # noqa: BLE001 -- report any runtime failure as exit 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())
