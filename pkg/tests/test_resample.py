import numpy as np
import pytest

from trickleflow.grid import ScalarGrid
from trickleflow.tda import gaussian_resample


def grid_of(values, ncols, nrows, nodata=-9999.0):
    return ScalarGrid(ncols=ncols, nrows=nrows, nodata=nodata,
                      values=[float(v) for v in values])


def test_constant_field_preserved():
    g = grid_of([3.25] * 30, 6, 5)
    for factor in (1, 2, 3):
        out = gaussian_resample(g, factor, sigma_cells=1.0)
        assert out.ncols == 6 * factor and out.nrows == 5 * factor
        for v in out.values:
            assert abs(v - 3.25) < 1e-9


def test_factor_one_tiny_sigma_is_identity():
    gen = np.random.Generator(np.random.PCG64(8))
    values = gen.uniform(0.0, 10.0, size=24)
    g = grid_of(values, 6, 4)
    out = gaussian_resample(g, 1, sigma_cells=0.05)
    for got, expected in zip(out.values, values):
        assert abs(got - expected) < 1e-6


def test_spike_localizes_to_source_block():
    g = grid_of([0.0] * 25, 5, 5)
    g.set(2, 3, 100.0)
    factor = 3
    out = gaussian_resample(g, factor, sigma_cells=1.0)
    arg = max(range(len(out.values)), key=lambda i: out.values[i])
    row, col = arg // out.ncols, arg % out.ncols
    assert 2 * factor <= row < 3 * factor
    assert 3 * factor <= col < 4 * factor


def test_output_bounded_by_input_range():
    gen = np.random.Generator(np.random.PCG64(15))
    for _ in range(30):
        ncols, nrows = int(gen.integers(2, 9)), int(gen.integers(2, 9))
        values = gen.uniform(-5.0, 5.0, size=ncols * nrows)
        g = grid_of(values, ncols, nrows)
        out = gaussian_resample(g, int(gen.integers(1, 4)),
                                sigma_cells=float(gen.uniform(0.3, 2.0)))
        lo, hi = values.min(), values.max()
        for v in out.values:
            assert lo - 1e-12 <= v <= hi + 1e-12


def test_nodata_inputs_excluded_and_holes_stay_holes():
    # lone data cell in a sea of nodata: fine cells beyond 3*sigma
    # of it have no contributor and must be nodata
    values = [-9999.0] * 49
    g = grid_of(values, 7, 7)
    g.set(3, 3, 8.0)
    out = gaussian_resample(g, 1, sigma_cells=0.5)
    for i, v in enumerate(out.values):
        row, col = i // 7, i % 7
        dist = ((row - 3) ** 2 + (col - 3) ** 2) ** 0.5
        if dist <= 1.5:
            assert v == pytest.approx(8.0)
        elif dist > 1.6:
            assert v == -9999.0


def test_geometry_scaling():
    g = ScalarGrid(ncols=4, nrows=2, x_origin=100.0, y_origin=50.0,
                   cell_size_m=250.0, values=[1.0] * 8)
    out = gaussian_resample(g, 2, sigma_cells=1.0)
    assert out.cell_size_m == 125.0
    assert out.x_origin == 100.0 and out.y_origin == 50.0


def test_parameter_validation():
    g = grid_of([1.0] * 4, 2, 2)
    with pytest.raises(ValueError):
        gaussian_resample(g, 0, sigma_cells=1.0)
    with pytest.raises(ValueError):
        gaussian_resample(g, 2, sigma_cells=0.0)
