"""
Tests for pre-move and the sliding-window target order.
"""

import random

import pytest

from src.features.core.code import Cell, Placement, Rail, SiteGrid, rail_of
from src.features.core.errors import Exhausted, NoLegalRow
from src.features.region.code import Window
from .code import DensityCache, OrderState, initial_order, nearest_legal_row, next_target, pre_move

A, B, C, D = 0, 1, 2, 3


@pytest.fixture
def grid():
    return SiteGrid(num_rows=8, num_sites=40, first_rail=Rail.P)


def drain(state, densities):
    return list(state.consume(lambda cid: densities.get(cid, 0.0)))


def test_nearest_row_respects_rail(grid):
    assert nearest_legal_row(grid, 1.4, 1, Rail.P) == 2


def test_nearest_row_any_rail_on_row(grid):
    assert nearest_legal_row(grid, 3.0, 1, Rail.ANY) == 3


def test_nearest_row_ties_go_down(grid):
    assert nearest_legal_row(grid, 2.5, 1, Rail.ANY) == 2
    assert nearest_legal_row(grid, 3.0, 2, Rail.P) == 2


def test_nearest_row_clamps_tall_cells(grid):
    assert nearest_legal_row(grid, 7.0, 3, Rail.ANY) == 5


def test_nearest_row_none_fits():
    g = SiteGrid(num_rows=2, num_sites=10)
    with pytest.raises(NoLegalRow):
        nearest_legal_row(g, 0.0, 3, Rail.ANY)
    single = SiteGrid(num_rows=1, num_sites=10, first_rail=Rail.P)
    with pytest.raises(NoLegalRow):
        nearest_legal_row(single, 0.0, 1, Rail.G)


def test_nearest_row_matches_full_scan(grid):
    rng = random.Random(3)
    for _ in range(1000):
        h = rng.randint(1, 4)
        rail = rng.choice([Rail.P, Rail.G, Rail.ANY])
        gy = rng.uniform(-1.0, grid.num_rows + 1.0)
        feasible = [
            r for r in range(grid.num_rows - h + 1)
            if rail is Rail.ANY or rail_of(grid, r) is rail
        ]
        expected = min(feasible, key=lambda r: (abs(r - gy), r))
        assert nearest_legal_row(grid, gy, h, rail) == expected


def test_pre_move_only_changes_rows(grid):
    cells = [
        Cell(id=0, name="a", gx=3.5, gy=1.4, w=2, h=1, rail=Rail.P),
        Cell(id=1, name="b", gx=9, gy=6.6, w=2, h=2, rail=Rail.G),
        Cell(id=2, name="f", gx=20, gy=4, w=2, h=1, fixed=True),
    ]
    p = Placement(grid, cells)
    moved = pre_move(p)
    assert [c.cy for c in moved.cells] == [2, 5, 4]
    assert [c.cx for c in moved.cells] == [3.5, 9, 20]
    assert p.cells[0].cy == 1


def test_initial_order_area_then_height_then_id(grid):
    cells = [
        Cell(id=0, name="a", gx=0, gy=0, w=6, h=1),
        Cell(id=1, name="b", gx=0, gy=0, w=3, h=1),
        Cell(id=2, name="c", gx=0, gy=0, w=3, h=2),
    ]
    assert initial_order(Placement(grid, cells)).sequence == [2, 0, 1]


def test_initial_order_skips_fixed_and_legalized(grid):
    cells = [
        Cell(id=0, name="a", gx=0, gy=0, w=1, h=1),
        Cell(id=1, name="f", gx=5, gy=0, w=9, h=1, fixed=True),
        Cell(id=2, name="l", gx=5, gy=0, w=9, h=1, cx=5, cy=0, legalized=True),
    ]
    assert initial_order(Placement(grid, cells)).sequence == [0]


def test_initial_order_matches_sort(grid):
    rng = random.Random(5)
    cells = [Cell(id=i, name=f"c{i}", gx=0, gy=0, w=rng.randint(1, 6), h=rng.randint(1, 4)) for i in range(200)]
    expected = [c.id for c in sorted(cells, key=lambda c: (-c.w * c.h, -c.h, c.id))]
    assert initial_order(Placement(grid, cells)).sequence == expected


def test_one_reorderable_entry():
    assert drain(OrderState([A, B, C], ws=3), {C: 0.5}) == [A, B, C]


def test_sliding_window_reorders_by_density():
    assert drain(OrderState([A, B, C, D], ws=4), {C: 0.5, D: 0.9}) == [A, B, D, C]


def test_equal_densities_keep_order():
    seq = list(range(20))
    assert drain(OrderState(seq[:], ws=6), {i: 0.3 for i in seq}) == seq


def test_ws_two_is_size_order():
    rng = random.Random(1)
    seq = list(range(50))
    densities = {i: rng.random() for i in seq}
    assert drain(OrderState(seq[:], ws=2), densities) == seq


def test_emits_a_permutation():
    rng = random.Random(2)
    seq = list(range(100))
    densities = {i: rng.random() for i in seq}
    assert sorted(drain(OrderState(seq[:], ws=8), densities)) == seq


def test_next_fixed_is_not_reordered():
    state = OrderState([A, B, C, D], ws=4)
    assert next_target(state, {B: 0.0, C: 0.1, D: 0.9}.get) == A
    assert state.next_fixed == B


def test_exhausted():
    state = OrderState([A], ws=2)
    next_target(state, lambda cid: 0.0)
    with pytest.raises(Exhausted):
        next_target(state, lambda cid: 0.0)


def test_ws_below_two_rejected():
    with pytest.raises(ValueError):
        OrderState([A], ws=1)


def test_density_cache_hits_and_invalidation():
    calls = []
    windows = {A: Window(0, 4, 0, 10), B: Window(0, 4, 20, 30)}

    def compute(cid):
        calls.append(cid)
        return 0.5, windows[cid]

    cache = DensityCache(compute)
    assert cache(A) == 0.5
    assert cache(A) == 0.5
    assert cache(B) == 0.5
    assert (cache.hits, cache.misses) == (1, 2)

    assert cache.invalidate(Window(2, 6, 5, 12)) == 1
    cache(A)
    cache(B)
    assert calls == [A, B, A]

    cache.discard(B)
    cache(B)
    assert calls == [A, B, A, B]
