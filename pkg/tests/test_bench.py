import numpy as np
import pytest

from lattice_mc.bench import (
    BenchBackend,
    BenchRecord,
    IncrementalCost,
    OpKind,
    TransferMode,
    baseline_subtract,
    derive_flops,
    emit_table,
    emit_transfer_table,
    expected_checksum,
    flops,
    run_transfer_bench,
    run_vector_bench,
    transfer_bytes,
    transfer_roundtrip,
)
from lattice_mc.lattice import Grid, GridDims

D512 = GridDims(512, 512)
D256 = GridDims(256, 256)
BACKENDS = list(BenchBackend)


def record(op, median, dims=D512, backend=BenchBackend.DATA_PARALLEL):
    return BenchRecord(op, dims, backend, 5, 5 * median, median, 0.0)


class TestChecksums:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_assign(self, backend):
        r = run_vector_bench(OpKind.ASSIGN, GridDims(16, 8), 3, backend, c=3.5)
        assert r.checksum == pytest.approx(3.5 * 16 * 8 * 4)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_add_counts_reps(self, backend):
        r = run_vector_bench(OpKind.ADD, GridDims(16, 16), 7, backend, c=1.0)
        assert r.checksum == 7 * 16 * 16 * 4

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_sin_of_zero(self, backend):
        assert run_vector_bench(OpKind.SIN, GridDims(8, 8), 3, backend).checksum == 0.0

    @pytest.mark.parametrize("backend", BACKENDS)
    @pytest.mark.parametrize("op", list(OpKind))
    def test_closed_form(self, op, backend):
        dims = GridDims(32, 16)
        r = run_vector_bench(op, dims, 5, backend, c=1.25, init=0.5 if op is not OpKind.LOG else None)
        want = expected_checksum(op, r.elements, 5, c=1.25, init=0.5 if op is not OpKind.LOG else None)
        # the compiled scalar loops evaluate sin/cos in double before rounding
        assert r.checksum == pytest.approx(want, rel=1e-5)

    def test_elements(self):
        assert record(OpKind.ADD, 1.0).elements == 512 * 512 * 4

    def test_reps_floor(self):
        with pytest.raises(ValueError):
            run_vector_bench(OpKind.ADD, GridDims(4, 4), 2)


class TestBaseline:
    def test_add_over_assign_512(self):
        inc = baseline_subtract([record(OpKind.ASSIGN, 0.0024), record(OpKind.ADD, 0.0027)])
        add = next(i for i in inc if i.op is OpKind.ADD)
        assert add.incremental_s == pytest.approx(0.0003)
        assert add.reliable

    def test_equal_is_flagged(self):
        inc = baseline_subtract([record(OpKind.ASSIGN, 0.002), record(OpKind.MUL, 0.002)])
        assert [i.incremental_s for i in inc] == [0.0, 0.0]
        assert not any(i.reliable for i in inc)
        assert inc[1].throughput is None

    def test_negative_kept(self):
        inc = baseline_subtract([record(OpKind.ASSIGN, 0.003), record(OpKind.SUB, 0.002)])
        assert len(inc) == 2 and inc[1].incremental_s < 0

    def test_missing_baseline(self):
        with pytest.raises(ValueError, match="ASSIGN"):
            baseline_subtract([record(OpKind.ADD, 0.001)])

    def test_baseline_matched_per_dims_and_backend(self):
        recs = [record(OpKind.ASSIGN, 0.001), record(OpKind.ASSIGN, 0.01, backend=BenchBackend.SCALAR),
                record(OpKind.ADD, 0.002), record(OpKind.ADD, 0.02, backend=BenchBackend.SCALAR)]
        inc = {(i.op, i.backend): i.incremental_s for i in baseline_subtract(recs)}
        assert inc[OpKind.ADD, BenchBackend.DATA_PARALLEL] == pytest.approx(0.001)
        assert inc[OpKind.ADD, BenchBackend.SCALAR] == pytest.approx(0.01)


class TestFlops:
    def test_single_op_derivation(self):
        inc = IncrementalCost(OpKind.ADD, D512, BenchBackend.DATA_PARALLEL, 0.0003, 512 * 512 * 4)
        assert derive_flops(inc) == pytest.approx(3.495253e9, rel=1e-6)

    def test_ising_kernel_derivation(self):
        inc = IncrementalCost(OpKind.ADD, D256, BenchBackend.DATA_PARALLEL, 0.0081, 256 * 256 * 4)
        assert derive_flops(inc, 109) == pytest.approx(256 * 256 * 109 * 4 / 0.0081)
        assert 3.52e9 < derive_flops(inc, 109) < 3.54e9

    def test_unit(self):
        assert flops(1, 1, 1.0) == 1.0

    @pytest.mark.parametrize("t", [0.0, -1e-3])
    def test_nonpositive_time(self, t):
        with pytest.raises(ValueError):
            flops(10, 1, t)


class TestTransfer:
    def test_bytes(self):
        assert transfer_bytes(D512, boundary=False) == 4 * 2**20
        assert transfer_bytes(D512, boundary=True) == 2044 * 16 == 32704

    @pytest.mark.parametrize("mode", list(TransferMode))
    def test_record(self, mode):
        r = run_transfer_bench(GridDims(64, 32), mode, 3)
        assert r.bytes_moved == transfer_bytes(GridDims(64, 32), mode.boundary)
        assert r.median_s > 0 and r.rate_mb_s > 0

    @pytest.mark.parametrize("boundary", [True, False])
    def test_roundtrip(self, boundary):
        dims = GridDims(9, 7)
        g = Grid(dims, np.random.default_rng(0).random(dims.shape + (4,), dtype=np.float32))
        back = transfer_roundtrip(g, boundary)
        assert back.cells is not g.cells
        assert np.array_equal(back.cells, g.cells)

    def test_reps_floor(self):
        with pytest.raises(ValueError):
            run_transfer_bench(GridDims(4, 4), TransferMode.FULL_READ, 1)

    def test_table(self):
        text = emit_transfer_table([run_transfer_bench(GridDims(8, 8), m, 3) for m in TransferMode])
        assert len(text.strip().splitlines()) == 5


class TestTable:
    def test_single_record(self):
        lines = emit_table([record(OpKind.ASSIGN, 0.001)]).strip().splitlines()
        assert lines[0] == "op,backend,width,height,reps,median_s,incr_s,throughput"
        assert len(lines) == 2

    def test_sorted(self):
        recs = [record(OpKind.SIN, 0.004, D256), record(OpKind.ADD, 0.002, D512),
                record(OpKind.ASSIGN, 0.001, D512), record(OpKind.ASSIGN, 0.0005, D256),
                record(OpKind.ADD, 0.001, D256)]
        a = emit_table(recs)
        assert a == emit_table(list(reversed(recs)))
        keys = [tuple(line.split(",")[:4]) for line in a.splitlines()[1:]]
        order = [op.name.lower() for op in OpKind]
        assert keys == sorted(keys, key=lambda k: (order.index(k[0]), int(k[2]) * int(k[3])))

    def test_markdown_rows(self):
        recs = [record(op, 0.001 * (i + 1), d) for i, op in enumerate([OpKind.ASSIGN, OpKind.ADD])
                for d in (D256, D512)]
        md = emit_table(recs, "markdown").strip().splitlines()
        assert md[0].startswith("| op |") and len(md) == 2 + 4

    def test_empty(self):
        with pytest.raises(ValueError):
            emit_table([])

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            emit_table([record(OpKind.ASSIGN, 0.001)], "html")


SIZES = [GridDims(n, n) for n in (64, 128, 256, 512)]


@pytest.mark.slow
@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("op", [OpKind.ASSIGN, OpKind.ADD, OpKind.SIN])
def test_timing_monotone_in_size(op, backend):
    medians = [run_vector_bench(op, d, 9, backend).median_s for d in SIZES]
    for small, big in zip(medians, medians[1:]):
        assert big >= 0.9 * small


@pytest.mark.slow
def test_scalar_transcendental_costs_more():
    recs = [run_vector_bench(op, D256, 9, BenchBackend.SCALAR) for op in OpKind]
    inc = {i.op: i.incremental_s for i in baseline_subtract(recs)}
    arith = max(inc[o] for o in (OpKind.ADD, OpKind.SUB, OpKind.MUL, OpKind.DIV))
    trans = min(inc[o] for o in OpKind if o.transcendental)
    assert trans >= arith
