import numpy as np
import pytest
from hypothesis import given, strategies as st

from diffbounds.grid import (Grid, GridError, Region, gradient, indicator, lp_norm,
                             neighbour_pairs, region_distance)


def test_spacing_and_count():
    g = Grid.box((0, -1), (2, 1), (4, 8))
    assert np.allclose(g.spacing, [0.5, 0.25])
    assert g.n_cells == 32
    assert g.cell_volume == pytest.approx(0.125)


@pytest.mark.parametrize("kwargs", [dict(lower=(0,), upper=(1,), cells_per_axis=(1,)),
                                    dict(lower=(1,), upper=(0,), cells_per_axis=(4,)),
                                    dict(lower=(0, 0, 0), upper=(1, 1, 1), cells_per_axis=(2, 2, 2))])
def test_invalid_grids(kwargs):
    with pytest.raises(GridError):
        Grid(**kwargs)


def test_distance_1d_cells():
    g = Grid.interval(0, 1, 10)
    assert region_distance(g.region([0]), g.region([9]), g) == pytest.approx(0.9)


def test_distance_identity():
    g = Grid.interval(0, 1, 10)
    X = g.region([2, 3])
    assert region_distance(X, X, g) == 0.0


def test_distance_2d_diagonal():
    g = Grid.box((0, 0), (1, 1), (10, 10))
    assert region_distance(g.region([0]), g.region([99]), g) == pytest.approx(np.hypot(0.9, 0.9))


def test_distance_empty_region():
    g = Grid.interval(0, 1, 10)
    with pytest.raises(GridError, match="empty region has no distance"):
        region_distance(Region.empty(g), g.region([1]), g)


def test_indicator_examples():
    g = Grid.interval(0, 1, 8)
    assert np.array_equal(indicator(g.all_cells(), g), np.ones(8))
    assert np.array_equal(indicator(Region.empty(g), g), np.zeros(8))
    e = np.zeros(8)
    e[3] = 1
    assert np.array_equal(indicator(g.region([3]), g), e)


def test_lp_norm_examples():
    g = Grid.interval(0, 1, 2)
    assert lp_norm(np.array([2.0, 2.0]), 1, g) == pytest.approx(2.0)
    f = np.array([-3.0, 1.0])
    assert lp_norm(f, np.inf, g) == 3.0
    g10 = Grid.interval(0, 1, 10)
    assert lp_norm(indicator(g10.region([4]), g10), 2, g10) == pytest.approx(np.sqrt(0.1))
    with pytest.raises(ValueError):
        lp_norm(f, 0.5, g)


def test_periodic_pairs_wrap():
    g = Grid.interval(0, 1, 5, "periodic")
    left, right = neighbour_pairs(g, 0)
    assert (4, 0) in set(zip(left.tolist(), right.tolist()))
    gn = Grid.interval(0, 1, 5)
    assert len(neighbour_pairs(gn, 0)[0]) == 4


def test_gradient_linear():
    g = Grid.box((0, 0), (1, 2), (8, 16))
    f = 3 * g.centers[:, 0] - 2 * g.centers[:, 1]
    assert np.allclose(gradient(f, g, 0), 3.0)
    assert np.allclose(gradient(f, g, 1), -2.0)


cells = st.integers(2, 12)
grids = st.one_of(st.builds(lambda n: Grid.interval(0, 1, n), st.integers(4, 30)),
                  st.builds(lambda a, b: Grid.box((0, 0), (1, 1), (a, b)), cells, cells))


@st.composite
def grid_and_regions(draw):
    g = draw(grids)
    idx = st.lists(st.integers(0, g.n_cells - 1), min_size=1, max_size=6)
    return g, g.region(draw(idx)), g.region(draw(idx)), g.region(draw(idx))


@given(grid_and_regions())
def test_distance_symmetric_and_monotone(data):
    g, X, Y, Z = data
    d = region_distance(X, Y, g)
    assert d == region_distance(Y, X, g)
    assert region_distance(X.union(Z), Y, g) <= d
    assert region_distance(X, Y.union(Z), g) <= d
    assert (d == 0) == bool(X.intersection(Y).size)


@given(grids, st.floats(-5, 5), st.sampled_from([1.0, 1.5, 2.0, 3.0, np.inf]), st.integers(0, 10 ** 6))
def test_lp_homogeneity_and_triangle(g, lam, p, seed):
    rng = np.random.default_rng(seed)
    f, h = rng.normal(size=g.n_cells), rng.normal(size=g.n_cells)
    assert lp_norm(lam * f, p, g) == pytest.approx(abs(lam) * lp_norm(f, p, g), rel=1e-12, abs=1e-300)
    assert lp_norm(f + h, p, g) <= lp_norm(f, p, g) + lp_norm(h, p, g) + 1e-12


@given(grids, st.integers(0, 10 ** 6))
def test_l2_matches_weighted_dot(g, seed):
    f = np.random.default_rng(seed).normal(size=g.n_cells)
    assert lp_norm(f, 2, g) ** 2 == pytest.approx(g.cell_volume * f @ f, rel=1e-12)
