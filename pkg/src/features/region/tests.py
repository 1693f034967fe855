"""
Tests for windows, local segments and local cells.
"""

import random

import pytest

from src.features.core.code import Blockage, Cell, Placement, SiteGrid
from src.features.core.errors import EmptyRegion, FallbackRequired
from .code import RowIndex, Window, WindowConfig, build_window, expand_window, extract_local_region


def placed(cid, x, y, w=2, h=1):
    return Cell(id=cid, name=f"c{cid}", gx=x, gy=y, w=w, h=h, cx=x, cy=y, legalized=True)


def test_window_centred_on_target():
    grid = SiteGrid(num_rows=20, num_sites=200)
    target = Cell(id=0, name="t", gx=50, gy=5, w=1, h=1)
    assert build_window(target, WindowConfig(10, 100), grid) == Window(0, 10, 0, 100)


def test_window_clipped_at_corner():
    grid = SiteGrid(num_rows=20, num_sites=200)
    target = Cell(id=0, name="t", gx=0, gy=0, w=3, h=2)
    assert build_window(target, WindowConfig(10, 100), grid) == Window(0, 5, 0, 50)


def test_window_contains_target_footprint():
    rng = random.Random(4)
    grid = SiteGrid(num_rows=30, num_sites=120)
    for _ in range(500):
        h = rng.randint(1, 4)
        w = rng.randint(1, 12)
        target = Cell(id=0, name="t", gx=rng.uniform(0, 120 - w), gy=rng.randint(0, 30 - h), w=w, h=h)
        cfg = WindowConfig(rng.randint(1, 12), rng.randint(1, 40))
        window = build_window(target, cfg, grid)
        assert window.contains(target.cx, target.cy, w, h)


def test_expand_window_doubles():
    grid = SiteGrid(num_rows=20, num_sites=200)
    cfg = WindowConfig(10, 100)
    assert expand_window(Window(0, 10, 0, 100), cfg, grid) == Window(0, 20, 0, 200)


def test_expand_grid_sized_window_is_unchanged():
    grid = SiteGrid(num_rows=20, num_sites=200)
    full = Window(0, 20, 0, 200)
    assert expand_window(full, WindowConfig(), grid, expansions_done=1) == full


def test_expand_window_limit():
    grid = SiteGrid(num_rows=20, num_sites=200)
    with pytest.raises(FallbackRequired):
        expand_window(Window(0, 10, 0, 100), WindowConfig(max_expand=4), grid, expansions_done=4)


def test_expand_window_keeps_centre():
    grid = SiteGrid(num_rows=100, num_sites=1000)
    assert expand_window(Window(40, 50, 400, 500), WindowConfig(), grid) == Window(35, 55, 350, 550)


def test_longest_run_kept():
    grid = SiteGrid(num_rows=1, num_sites=10, blockages=(Blockage(0, 3, 4),))
    region = extract_local_region(Placement(grid, []), Window(0, 1, 0, 10))
    assert [(s.lo, s.hi) for s in region.segments] == [(4, 10)]


def test_equal_runs_keep_the_right_one():
    """Blockage [4, 6) leaves [0, 4) and [6, 10), both as far from the centre."""
    grid = SiteGrid(num_rows=1, num_sites=10, blockages=(Blockage(0, 4, 6),))
    region = extract_local_region(Placement(grid, []), Window(0, 1, 0, 10))
    assert [(s.lo, s.hi) for s in region.segments] == [(6, 10)]


def test_tie_goes_to_run_nearer_target():
    grid = SiteGrid(num_rows=1, num_sites=10, blockages=(Blockage(0, 4, 6),))
    target = Cell(id=9, name="t", gx=1, gy=0, w=1, h=1)
    region = extract_local_region(Placement(grid, []), Window(0, 1, 0, 10), target=target)
    assert (region.segments[0].lo, region.segments[0].hi) == (0, 4)


def test_fixed_cells_block():
    grid = SiteGrid(num_rows=1, num_sites=10)
    fixed = Cell(id=0, name="f", gx=3, gy=0, w=2, h=1, fixed=True)
    region = extract_local_region(Placement(grid, [fixed]), Window(0, 1, 0, 10))
    assert (region.segments[0].lo, region.segments[0].hi) == (5, 10)
    assert region.local_cells == {}


def test_cell_half_inside_window_is_excluded():
    grid = SiteGrid(num_rows=2, num_sites=20)
    p = Placement(grid, [placed(0, 9, 0, w=3), placed(1, 2, 0)])
    region = extract_local_region(p, Window(0, 2, 0, 10))
    assert set(region.local_cells) == {1}
    assert (region.segment(0).lo, region.segment(0).hi) == (0, 9)


def test_partial_multi_row_cell_becomes_obstacle():
    """A double-row cell leaves the window's row range; it blocks the row it shares."""
    grid = SiteGrid(num_rows=4, num_sites=20)
    p = Placement(grid, [placed(0, 5, 1, w=2, h=2), placed(1, 10, 1)])
    region = extract_local_region(p, Window(0, 2, 0, 20))
    assert set(region.local_cells) == {1}
    assert (region.segment(1).lo, region.segment(1).hi) == (7, 20)
    assert (region.segment(0).lo, region.segment(0).hi) == (0, 20)


def test_unlegalized_cells_are_invisible():
    grid = SiteGrid(num_rows=1, num_sites=10)
    loose = Cell(id=0, name="u", gx=3, gy=0, w=2, h=1)
    region = extract_local_region(Placement(grid, [loose]), Window(0, 1, 0, 10))
    assert region.local_cells == {}
    assert region.density == 0.0


def test_density_ratio():
    grid = SiteGrid(num_rows=2, num_sites=10)
    p = Placement(grid, [placed(0, 0, 0, w=4, h=2), placed(1, 5, 0, w=2), placed(2, 6, 1, w=2)])
    region = extract_local_region(p, Window(0, 2, 0, 10))
    assert region.density == pytest.approx(0.6)
    assert region.segment(0).cells == (0, 1)
    assert region.segment(1).cells == (0, 2)


def test_multi_row_cell_in_every_spanned_segment():
    grid = SiteGrid(num_rows=3, num_sites=10)
    p = Placement(grid, [placed(0, 2, 0, w=2, h=3)])
    region = extract_local_region(p, Window(0, 3, 0, 10))
    assert [s.cells for s in region.segments] == [(0,), (0,), (0,)]


def test_empty_region():
    grid = SiteGrid(num_rows=1, num_sites=10, blockages=(Blockage(0, 0, 10),))
    with pytest.raises(EmptyRegion):
        extract_local_region(Placement(grid, []), Window(0, 1, 0, 10))


def test_segments_match_site_scan():
    rng = random.Random(8)
    for _ in range(200):
        n = rng.randint(5, 40)
        blocks = []
        for r in range(3):
            for _ in range(rng.randint(0, 4)):
                s = rng.randrange(n)
                blocks.append(Blockage(r, s, min(n, s + rng.randint(1, 5))))
        grid = SiteGrid(num_rows=3, num_sites=n, blockages=tuple(blocks))
        lo, hi = sorted(rng.sample(range(n + 1), 2))
        window = Window(0, 3, lo, hi)
        try:
            region = extract_local_region(Placement(grid, []), window)
        except EmptyRegion:
            region = None
        blocked = {(b.row, s) for b in grid.blockages for s in range(b.start, b.end)}
        for r in range(3):
            best = 0
            run = 0
            for s in range(lo, hi):
                run = 0 if (r, s) in blocked else run + 1
                best = max(best, run)
            seg = region.segment(r) if region is not None else None
            assert (seg.length if seg is not None else 0) == best
            if seg is not None:
                assert not any((r, s) in blocked for s in range(seg.lo, seg.hi))


def test_row_index_queries():
    grid = SiteGrid(num_rows=3, num_sites=30)
    cells = [placed(0, 2, 0, w=3), placed(1, 10, 0, w=2, h=2), placed(2, 20, 1)]
    p = Placement(grid, cells)
    index = RowIndex.from_placement(p)
    assert [c.id for c in index.cells_in(0, 4, 11)] == [0, 1]
    assert [c.id for c in index.cells_in(1, 12, 30)] == [2]
    index.move(cells[0], 5.0)
    assert [c.id for c in index.cells_in(0, 0, 4)] == []
    assert cells[0].cx == 5.0
    index.remove(cells[2])
    assert 2 not in index
