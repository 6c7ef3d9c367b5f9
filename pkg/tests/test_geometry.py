import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellfree.geometry import (
    ConfigurationError,
    LayoutConfig,
    assign_cells,
    balanced_pilots,
    grid_positions,
    link_geometry,
    place_network,
    wraparound_distance,
)


def test_grid_positions_are_cell_centres():
    pos = grid_positions(4, 1000.0)
    assert sorted(map(tuple, pos)) == [(250.0, 250.0), (250.0, 750.0), (750.0, 250.0), (750.0, 750.0)]


def test_wraparound_picks_nearest_copy():
    a = np.array([[10.0, 10.0]])
    b = np.array([[990.0, 990.0]])
    assert wraparound_distance(a, b, 1000.0)[0] == pytest.approx(math.hypot(20, 20))
    assert wraparound_distance(a, b, 1000.0, 10.0)[0] == pytest.approx(math.sqrt(800 + 100))


@given(st.lists(st.floats(0, 1000), min_size=4, max_size=4))
def test_wraparound_is_symmetric_and_bounded(xy):
    a = np.array([xy[:2]])
    b = np.array([xy[2:]])
    d = wraparound_distance(a, b, 1000.0)[0]
    assert d == pytest.approx(wraparound_distance(b, a, 1000.0)[0])
    assert d <= 1000.0 / math.sqrt(2) + 1e-9
    assert d <= np.linalg.norm(a - b) + 1e-9


@given(st.integers(1, 60), st.integers(1, 20), st.integers(0, 1000))
def test_balanced_pilots(K, tau_p, seed):
    pilots = balanced_pilots(K, tau_p, np.random.default_rng(seed))
    counts = np.bincount(pilots, minlength=tau_p)
    assert counts.max() - counts.min() <= 1
    if K <= tau_p:
        assert len(set(pilots)) == K


def test_cellular_drop_has_unique_pilots_per_drop_cell():
    cfg = LayoutConfig(num_aps=16, num_ues=40, num_pilots=10, cellular_cells=4)
    net = place_network(cfg, 3)
    for c in range(4):
        in_cell = net.pilot_of_ue[net.drop_cell_of_ue == c]
        assert len(set(in_cell)) == len(in_cell) == 10
        ue = net.ue_positions[net.drop_cell_of_ue == c]
        lo = np.array([c // 2, c % 2]) * 500.0
        assert np.all((ue >= lo) & (ue <= lo + 500.0))
    assert net.bs_positions.shape == (4, 2)


def test_layout_is_reproducible_and_seed_sensitive():
    cfg = LayoutConfig(num_aps=16, num_ues=8, num_pilots=4, cellular_cells=0)
    a, b, c = place_network(cfg, 1), place_network(cfg, 1), place_network(cfg, 2)
    np.testing.assert_array_equal(a.ue_positions, b.ue_positions)
    assert not np.array_equal(a.ue_positions, c.ue_positions)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(num_aps=10),  # not a square on a grid
        dict(num_ues=41),  # not divisible by 4 cells
        dict(num_ues=80, num_pilots=10),  # 20 UEs per cell > 10 pilots
        dict(ap_placement="hexagonal"),
        dict(cellular_cells=3),
        dict(area_side_m=0.0),
    ],
)
def test_invalid_layouts_are_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        LayoutConfig(**kwargs)


def test_link_geometry_and_cell_assignment():
    cfg = LayoutConfig(num_aps=4, num_ues=4, num_pilots=4, cellular_cells=0)
    net = place_network(cfg, 0)
    dist, horiz, angle = link_geometry(net, 10.0)
    assert dist.shape == horiz.shape == angle.shape == (4, 4)
    np.testing.assert_allclose(dist**2, horiz**2 + 100.0)
    beta = np.array([[1.0, 1.0], [0.5, 2.0], [3.0, 0.1], [0.2, 0.2]])
    assert list(assign_cells(net, beta).cell_of_ue) == [0, 1, 0, 0]
