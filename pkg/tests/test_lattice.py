import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lattice_mc.lattice import (
    BoundaryBuffer,
    BoundaryMode,
    Color,
    Grid,
    GridDims,
    check_mode,
    color_mask,
    extract_boundary,
    export_image,
    inject_boundary,
    neighbor_sum,
    neighbors,
    new_grid,
    parity,
    read_ppm,
)

dims_st = st.builds(GridDims, st.integers(2, 12), st.integers(2, 12))
even_dims_st = st.builds(GridDims, st.integers(1, 6).map(lambda n: 2 * n), st.integers(1, 6).map(lambda n: 2 * n))


@pytest.mark.parametrize("w,h,fill", [(2, 2, 1), (3, 2, 0), (512, 512, -1)])
def test_new_grid(w, h, fill):
    g = new_grid(GridDims(w, h), fill)
    assert g.cells.size == w * h
    assert (g.cells == fill).all()


@pytest.mark.parametrize("w,h", [(1, 5), (5, 1), (0, 0)])
def test_degenerate_dims(w, h):
    with pytest.raises(ValueError):
        GridDims(w, h)


def test_parse_dims():
    assert GridDims.parse("64x32") == GridDims(64, 32)
    assert GridDims.parse("16") == GridDims(16, 16)
    with pytest.raises(ValueError):
        GridDims.parse("sixty")


@pytest.mark.parametrize("x,y,color", [(0, 0, Color.BLACK), (1, 0, Color.WHITE), (3, 5, Color.BLACK)])
def test_parity(x, y, color):
    assert parity(x, y, GridDims(8, 8)) is color


def test_parity_out_of_range():
    with pytest.raises(IndexError):
        parity(8, 0, GridDims(8, 8))


def test_neighbors_examples():
    d4 = GridDims(4, 4)
    assert neighbors(0, 0, d4, BoundaryMode.PERIODIC) == [(0, 3), (1, 0), (0, 1), (3, 0)]
    assert neighbors(0, 0, d4, BoundaryMode.CLAMPED) == [(1, 0), (0, 1)]
    assert neighbors(2, 2, GridDims(8, 8), BoundaryMode.PERIODIC) == [(2, 1), (3, 2), (2, 3), (1, 2)]
    with pytest.raises(IndexError):
        neighbors(4, 0, d4, BoundaryMode.CLAMPED)


def test_periodic_needs_even_dims():
    with pytest.raises(ValueError):
        check_mode(GridDims(3, 4), BoundaryMode.PERIODIC)
    check_mode(GridDims(3, 4), BoundaryMode.CLAMPED)


@given(even_dims_st)
def test_parity_partition(dims):
    black, white = color_mask(dims, Color.BLACK), color_mask(dims, Color.WHITE)
    assert not (black & white).any() and (black | white).all()
    for s in range(dims.sites):
        x, y = dims.coords(s)
        for nx, ny in neighbors(x, y, dims, BoundaryMode.PERIODIC):
            assert parity(nx, ny, dims) is not parity(x, y, dims)


@given(dims_st)
def test_clamped_neighbors_in_range(dims):
    for s in range(dims.sites):
        nb = neighbors(*dims.coords(s), dims, BoundaryMode.CLAMPED)
        assert 2 <= len(nb) <= 4
        assert all(0 <= x < dims.width and 0 <= y < dims.height for x, y in nb)


@given(dims_st, st.sampled_from(list(BoundaryMode)))
def test_neighbor_symmetry(dims, mode):
    for s in range(dims.sites):
        x, y = dims.coords(s)
        for nx, ny in neighbors(x, y, dims, mode):
            assert (x, y) in neighbors(nx, ny, dims, mode)


@given(dims_st)
def test_index_bijection(dims):
    assert [dims.index(*dims.coords(s)) for s in range(dims.sites)] == list(range(dims.sites))


@given(dims_st, st.sampled_from(list(BoundaryMode)), st.integers(0, 2**32 - 1))
def test_neighbor_sum_matches_lists(dims, mode, seed):
    cells = np.random.default_rng(seed).choice([-1, 1], size=dims.shape)
    total = neighbor_sum(cells, mode)
    for s in range(dims.sites):
        x, y = dims.coords(s)
        assert total[y, x] == sum(cells[ny, nx] for nx, ny in neighbors(x, y, dims, mode))


class TestBoundary:
    def test_two_by_two(self):
        g = Grid(GridDims(2, 2), np.array([[1, 2], [3, 4]]))
        # clockwise from (0, 0): (0,0) (1,0) (1,1) (0,1)
        assert extract_boundary(g).cells.tolist() == [1, 2, 4, 3]

    def test_three_by_three_excludes_center(self):
        g = Grid(GridDims(3, 3), np.arange(9).reshape(3, 3))
        buf = extract_boundary(g)
        assert len(buf.cells) == 8 and 4 not in buf.cells.tolist()
        assert buf.cells.tolist() == [0, 1, 2, 5, 8, 7, 6, 3]

    def test_size_512(self):
        assert len(extract_boundary(new_grid(GridDims(512, 512), 0)).cells) == 2044

    def test_inject_ones(self):
        g = new_grid(GridDims(3, 3), 0)
        inject_boundary(g, BoundaryBuffer(g.dims, np.ones(8, dtype=int)))
        assert g.cells.sum() == 8 and g.cells[1, 1] == 0

    def test_mismatch(self):
        g = new_grid(GridDims(3, 3), 0)
        with pytest.raises(ValueError):
            inject_boundary(g, BoundaryBuffer(GridDims(4, 4), np.ones(12)))
        with pytest.raises(ValueError):
            BoundaryBuffer(GridDims(3, 3), np.ones(7))

    @given(dims_st, st.integers(0, 2**32 - 1))
    def test_roundtrip(self, dims, seed):
        cells = np.random.default_rng(seed).integers(0, 100, size=dims.shape + (4,))
        g = Grid(dims, cells.copy())
        buf = extract_boundary(g)
        inject_boundary(g, buf)
        assert np.array_equal(g.cells, cells)
        assert np.array_equal(extract_boundary(g).cells, buf.cells)


class TestPpm:
    def test_all_up(self, tmp_path):
        g = new_grid(GridDims(2, 2), 1)
        path = export_image(g, {1: (255, 0, 0)}, tmp_path / "a.ppm")
        assert path.read_bytes() == b"P6\n2 2\n255\n" + bytes([255, 0, 0]) * 4

    def test_checkerboard(self, tmp_path):
        g = Grid(GridDims(2, 2), np.array([[1, -1], [-1, 1]]))
        path = export_image(g, {1: (255, 0, 0), -1: (0, 0, 255)}, tmp_path / "c.ppm")
        red, blue = bytes([255, 0, 0]), bytes([0, 0, 255])
        assert path.read_bytes() == b"P6\n2 2\n255\n" + red + blue + blue + red

    def test_rows_top_down(self, tmp_path):
        g = Grid(GridDims(2, 3), np.array([[0, 0], [0, 0], [1, 1]]))
        w, h, data = read_ppm(export_image(g, {0: (0, 0, 0), 1: (9, 9, 9)}, tmp_path / "r.ppm"))
        assert (w, h) == (2, 3) and data[-6:] == bytes([9] * 6) and data[:12] == bytes(12)

    def test_callable_palette(self, tmp_path):
        g = new_grid(GridDims(2, 2), 7)
        _, _, data = read_ppm(export_image(g, lambda v: (v, v, v), tmp_path / "f.ppm"))
        assert data == bytes([7] * 12)

    def test_unmapped_value(self, tmp_path):
        with pytest.raises(ValueError):
            export_image(new_grid(GridDims(2, 2), 5), {1: (0, 0, 0)}, tmp_path / "x.ppm")

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            export_image(new_grid(GridDims(2, 2), 1), {1: (0, 0, 0)}, tmp_path / "missing" / "x.ppm")
