"""Vector-op and transfer tables with baseline subtraction, in markdown.

    python3 scripts/bench_tables.py --dims 256x256 512x512 --reps 21
"""
import argparse

from lattice_mc.bench import (
    BenchBackend,
    OpKind,
    TransferMode,
    baseline_subtract,
    emit_table,
    emit_transfer_table,
    run_transfer_bench,
    run_vector_bench,
)
from lattice_mc.lattice import GridDims


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=GridDims.parse, nargs="+", default=[GridDims(256, 256), GridDims(512, 512)])
    ap.add_argument("--reps", type=int, default=21)
    args = ap.parse_args()

    records = [run_vector_bench(op, d, args.reps, b) for b in BenchBackend for d in args.dims for op in OpKind]
    print(emit_table(records, "markdown"))
    for inc in baseline_subtract(records):
        if inc.op is not OpKind.ASSIGN:
            rate = f"{inc.throughput / 1e9:.2f} Gop/s" if inc.reliable else "unreliable"
            print(f"{inc.backend.value:>13} {inc.dims!s:>8} {inc.op.name.lower():>6}: "
                  f"{inc.incremental_s * 1e3:8.4f} ms  {rate}")
    print()
    print("in-host transfer analog (not a bus measurement)")
    print(emit_transfer_table([run_transfer_bench(d, m, args.reps) for d in args.dims for m in TransferMode]))


if __name__ == "__main__":
    main()
