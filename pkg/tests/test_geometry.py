"""Workspace, grid, distance queries and label assignment."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ltlcoord.geometry import (Capsule, Disc, Footprint, GeometryError, Grid, Polygon, Workspace,
                               dist_to_obstacles, inflate, point_segment_distance, rectangle,
                               segment_polygon_distance)


def _grid(size=0.5, extent=5.0, obstacles=(), regions=None):
    ws = Workspace((0.0, 0.0, extent, extent), list(obstacles), dict(regions or {}))
    return Grid(ws, size)


# ---------------------------------------------------------------- cell_of

def test_cell_of_interior_point():
    assert _grid().cell_of((0.3, 0.7)) == (0, 1)


def test_cell_of_shared_edge_goes_to_lower_index():
    g = _grid()
    assert g.cell_of((0.5, 0.2)) == (0, 0)
    assert g.cell_of((0.5 + 1e-12, 0.2)) == (1, 0)
    assert g.cell_of((1.0, 1.5)) == (1, 2)


def test_cell_of_workspace_edges():
    assert _grid().cell_of((5.0, 5.0)) == (9, 9)
    assert _grid().cell_of((0.0, 0.0)) == (0, 0)


def test_cell_of_outside_raises():
    with pytest.raises(GeometryError):
        _grid().cell_of((-0.1, 1.0))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5))
def test_partition_every_point_has_one_cell(x, y):
    g = _grid()
    i, j = g.cell_of((x, y))
    x0, y0, x1, y1 = g.rect((i, j))
    assert x0 <= x <= x1 and y0 <= y <= y1
    assert (x > x0 or i == 0) and (y > y0 or j == 0)


def test_center_round_trip():
    g = _grid()
    assert all(g.cell_of(g.center(c)) == c for c in g.cells)


# ---------------------------------------------------------------- regions_intersecting

def _sampled_cells(g, shape_dist, r, n=41):
    """Cells containing a lattice sample point within ``r`` of the shape."""
    out = set()
    for c in g.cells:
        x0, y0, x1, y1 = g.rect(c)
        xs, ys = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
        if (shape_dist(xs.ravel(), ys.ravel()) <= r).any():
            out.add(c)
    return out


def test_zero_disc_at_center_is_single_cell():
    g = _grid()
    c = (3, 4)
    assert g.regions_intersecting(Disc(g.center(c), 0.0)) == {c}


def test_disc_matches_dense_sampling():
    g = _grid()
    center = g.center((4, 4))
    got = g.regions_intersecting(Disc(center, 0.6))
    want = _sampled_cells(g, lambda x, y: np.hypot(x - center[0], y - center[1]), 0.6)
    assert got == want
    assert len(got) == 9


def test_shape_outside_workspace_is_empty():
    assert _grid().regions_intersecting(Disc((20.0, 20.0), 1.0)) == frozenset()


@settings(max_examples=60, deadline=None)
@given(st.floats(0.2, 4.8), st.floats(0.2, 4.8), st.floats(0.05, 1.2))
def test_disc_cells_agree_with_sampling(x, y, r):
    g = _grid()
    got = g.regions_intersecting(Disc((x, y), r))
    sampled = _sampled_cells(g, lambda px, py: np.hypot(px - x, py - y), r)
    # sampling can only miss cells that the disc barely touches
    assert sampled <= got
    for c in got - sampled:
        x0, y0, x1, y1 = g.rect(c)
        gap = math.hypot(max(x0 - x, 0, x - x1), max(y0 - y, 0, y - y1))
        assert gap <= r + 1e-9 and gap > r - g.size / 40
    assert g.cell_of((x, y)) in got


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 4.5), st.floats(0.5, 4.5), st.floats(0.5, 4.5), st.floats(0.5, 4.5), st.floats(0.0, 0.8))
def test_capsule_cells_agree_with_sampling(ax, ay, bx, by, r):
    g = _grid()
    got = g.regions_intersecting(Capsule((ax, ay), (bx, by), r))

    def dist(px, py):
        return np.array([point_segment_distance((u, v), (ax, ay), (bx, by)) for u, v in zip(px, py)])

    sampled = _sampled_cells(g, dist, r, n=9)
    assert sampled <= got
    for c in got:
        x0, y0, x1, y1 = g.rect(c)
        square = rectangle(x0, y0, x1, y1)
        assert segment_polygon_distance((ax, ay), (bx, by), square) <= r + 1e-9


def test_polygon_cells():
    g = _grid()
    got = g.regions_intersecting(rectangle(1.0, 1.0, 2.0, 1.5))
    # closed intersection: the touching neighbours on every side are included
    assert got == {(i, j) for i in range(1, 5) for j in range(1, 4)}


# ---------------------------------------------------------------- labels

def test_labels():
    g = _grid(obstacles=[rectangle(3.0, 3.0, 4.0, 4.0)], regions={"T1": [rectangle(0.0, 0.0, 1.0, 1.0)]})
    assert g.label_of(g.cell_of((0.25, 0.25))) == {"W", "T1"}
    assert g.label_of(g.cell_of((3.25, 3.75))) == {"W", "O"}
    assert g.label_of(g.cell_of((2.25, 2.25))) == {"W"}


def test_alignment_check_accepts_grid_aligned_regions():
    g = _grid(obstacles=[rectangle(3.0, 3.0, 4.0, 4.0)], regions={"T1": [rectangle(0.0, 0.0, 1.0, 1.0)]})
    assert g.check_label_alignment() == []


def test_alignment_check_rejects_misaligned_region():
    g = _grid(regions={"T1": [rectangle(0.2, 0.0, 1.0, 1.0)]})
    assert g.check_label_alignment()
    tilted = _grid(regions={"T1": [Polygon([(0, 0), (1, 0), (0.5, 1)])]})
    assert tilted.check_label_alignment()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 9), st.integers(0, 9))
def test_aligned_labels_are_constant_over_a_cell(i, j):
    g = _grid(obstacles=[rectangle(3.0, 3.0, 4.0, 4.0)], regions={"T1": [rectangle(0.0, 0.0, 1.5, 1.0)]})
    x0, y0, x1, y1 = g.rect((i, j))
    ws = g.workspace
    for u in np.linspace(x0 + 1e-6, x1 - 1e-6, 5):
        for v in np.linspace(y0 + 1e-6, y1 - 1e-6, 5):
            labels = {"W"}
            if any(p.contains((u, v), strict=True) for p in ws.obstacles):
                labels.add("O")
            if any(p.contains((u, v), strict=True) for p in ws.regions["T1"]):
                labels.add("T1")
            assert labels == g.label_of((i, j))


def test_bundled_scenarios_are_aligned():
    from ltlcoord.scenario import BUNDLED, load_scenario
    for name in BUNDLED:
        cfg = load_scenario(name).config
        assert Grid(cfg.workspace, cfg.grid_size).check_label_alignment() == []


# ---------------------------------------------------------------- distances

def test_segment_distance_to_square():
    sq = [rectangle(0.0, 0.0, 1.0, 1.0)]
    assert abs(dist_to_obstacles(((2.0, -1.0), (2.0, 3.0)), sq) - 1.0) < 1e-9


def test_segment_crossing_polygon_is_zero():
    sq = [rectangle(0.0, 0.0, 1.0, 1.0)]
    assert dist_to_obstacles(((-1.0, 0.5), (2.0, 0.5)), sq) == 0.0


def test_segment_inside_polygon_is_zero():
    sq = [rectangle(0.0, 0.0, 1.0, 1.0)]
    assert dist_to_obstacles(((0.2, 0.2), (0.4, 0.4)), sq) == 0.0


def test_no_obstacles_is_infinite():
    assert dist_to_obstacles(((0.0, 0.0), (1.0, 1.0)), []) == math.inf


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 4), st.floats(-3, 4), st.floats(-3, 4), st.floats(-3, 4))
def test_segment_distance_matches_sampling(ax, ay, bx, by):
    sq = rectangle(0.0, 0.0, 1.0, 1.0)
    d = segment_polygon_distance((ax, ay), (bx, by), sq)
    ts = np.linspace(0, 1, 401)
    px, py = ax + ts * (bx - ax), ay + ts * (by - ay)
    dx = np.maximum(np.maximum(0 - px, px - 1), 0)
    dy = np.maximum(np.maximum(0 - py, py - 1), 0)
    sampled = np.hypot(dx, dy).min()
    step = math.hypot(bx - ax, by - ay) / 400
    assert d <= sampled + 1e-9
    assert d >= sampled - step - 1e-12


# ---------------------------------------------------------------- footprints

def test_inflate_adds_braking_distance():
    disc = inflate(0.2, (1.0, 2.0), 0.25)
    assert disc.center == (1.0, 2.0) and abs(disc.radius - 0.45) < 1e-12


def test_inflate_zero_is_footprint():
    assert inflate(0.3, (0.0, 0.0), 0.0).radius == 0.3


def test_inflate_at_boundary_may_leave_workspace():
    g = _grid()
    disc = inflate(0.3, (0.0, 2.0), 0.2)
    assert disc.center[0] - disc.radius < 0
    assert all(0 <= c[0] < g.nx for c in g.regions_intersecting(disc))


def test_inflate_rejects_negative():
    with pytest.raises(GeometryError):
        inflate(0.3, (0.0, 0.0), -0.1)


def test_footprint_radius_positive():
    with pytest.raises(GeometryError):
        Footprint(0.0)
    assert Footprint(0.5).radius == 0.5


def test_workspace_rejects_outside_obstacle():
    with pytest.raises(GeometryError):
        Workspace((0, 0, 5, 5), [rectangle(4, 4, 6, 6)])


def test_polygon_containment():
    sq = rectangle(0, 0, 1, 1)
    assert sq.contains((0.5, 0.5))
    assert sq.contains((1.0, 0.5))
    assert not sq.contains((1.0, 0.5), strict=True)
