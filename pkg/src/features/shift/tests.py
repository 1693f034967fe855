"""
Tests for trial insertion and both shifters.
"""

import pytest

from src.features.core.code import Cell, Placement, Rail, SiteGrid
from src.features.core.errors import OutOfSegment, RailMismatch, SegmentOverflow
from src.features.region.code import Window, extract_local_region
from .code import (
    Direction,
    combine_phases,
    multi_pass_shift,
    sacs_shift,
    shift_both_phases,
    sort_cells,
    trial_insert,
)


def placed(cid, name, x, y, w, h=1):
    return Cell(id=cid, name=name, gx=x, gy=y, w=w, h=h, cx=x, cy=y, legalized=True)


def region_of(num_rows, num_sites, cells):
    p = Placement(SiteGrid(num_rows=num_rows, num_sites=num_sites), cells)
    return extract_local_region(p, Window(0, num_rows, 0, num_sites))


@pytest.fixture
def pair_region():
    """One row [0, 20) holding A at 4 and B at 8, both 3 wide."""
    return region_of(1, 20, [placed(0, "A", 4, 0, 3), placed(1, "B", 8, 0, 3)])


@pytest.fixture
def stacked_region():
    """Three rows [0, 30); d spans rows 0-1 and e rows 1-2, so a push in row 2 travels down."""
    return region_of(3, 30, [
        placed(0, "a", 0, 0, 2),
        placed(1, "b", 20, 0, 3),
        placed(2, "c", 1, 1, 3),
        placed(3, "d", 6, 0, 4, h=2),
        placed(4, "e", 10, 1, 4, h=2),
        placed(5, "f", 25, 2, 3),
    ])


@pytest.fixture
def target():
    return Cell(id=99, name="T", gx=6, gy=0, w=4, h=1)


def test_pair_left_and_right(pair_region, target):
    copy = trial_insert(pair_region, target, 6, 0)
    assert copy.rows[0] == [0, 99, 1]
    left = sacs_shift(copy, Direction.LEFT)
    right = sacs_shift(copy, Direction.RIGHT)
    assert left.positions[0] == 3
    assert left.moved == {0}
    assert right.positions[1] == 10
    assert right.moved == {1}
    assert combine_phases(copy, left, right) == {0: 3, 1: 10, 99: 6}


def test_pair_matches_multi_pass(pair_region, target):
    copy = trial_insert(pair_region, target, 6, 0)
    for direction in Direction:
        fast = sacs_shift(copy, direction)
        slow = multi_pass_shift(copy, direction)
        assert {k: fast.positions[k] for k in slow.positions} == slow.positions


def test_no_overlap_is_a_no_op(pair_region):
    small = Cell(id=99, name="T", gx=7, gy=0, w=1, h=1)
    copy = trial_insert(pair_region, small, 7, 0)
    for direction in Direction:
        assert sacs_shift(copy, direction).moved == set()
        result = multi_pass_shift(copy, direction)
        assert result.moved == set()
        assert result.pass_count == 1


def test_stacked_rows_need_three_sweeps(stacked_region):
    t = Cell(id=99, name="T", gx=12, gy=2, w=3, h=1)
    copy = trial_insert(stacked_region, t, 12, 2)
    slow = multi_pass_shift(copy, Direction.LEFT)
    fast = sacs_shift(copy, Direction.LEFT)
    assert slow.pass_count == 3
    assert fast.pass_count == 1
    assert slow.positions[4] == 8
    assert slow.positions[3] == 4
    assert slow.moved == {3, 4}
    assert {k: fast.positions[k] for k in slow.positions} == slow.positions


def test_emission_order_follows_traversal(stacked_region):
    t = Cell(id=99, name="T", gx=12, gy=2, w=3, h=1)
    copy = trial_insert(stacked_region, t, 12, 2)
    fast = sacs_shift(copy, Direction.LEFT)
    expected = (99,) + sort_cells(copy, Direction.LEFT).traversal()
    assert tuple(fast.positions) == expected
    assert expected[1:] == (5, 1, 4, 3, 2, 0)


def test_cursor_advances_once_per_subcell(stacked_region):
    t = Cell(id=99, name="T", gx=12, gy=2, w=3, h=1)
    copy = trial_insert(stacked_region, t, 12, 2)
    fast = sacs_shift(copy, Direction.RIGHT)
    subcells = sum(len(ids) for ids in copy.rows.values())
    assert fast.cursor_advances <= subcells


def test_trial_insert_on_empty_region():
    region = region_of(2, 10, [])
    t = Cell(id=5, name="T", gx=1, gy=0, w=2, h=2)
    copy = trial_insert(region, t, 1, 0)
    assert copy.positions == {5: 1}
    assert copy.rows == {0: [5], 1: [5]}


def test_trial_insert_wrong_rail(pair_region):
    t = Cell(id=99, name="T", gx=0, gy=0, w=1, h=1, rail=Rail.G)
    with pytest.raises(RailMismatch):
        trial_insert(pair_region, t, 0, 0)


def test_trial_insert_out_of_segment(pair_region, target):
    with pytest.raises(OutOfSegment):
        trial_insert(pair_region, target, 17, 0)


def test_trial_insert_leaves_region_untouched(pair_region, target):
    before = dict(pair_region.local_cells)
    copy = trial_insert(pair_region, target, 6, 0)
    shift_both_phases(copy)
    assert pair_region.local_cells == before
    assert pair_region.segment(0).cells == (0, 1)


def test_overflow_detected():
    region = region_of(1, 10, [placed(0, "A", 0, 0, 5), placed(1, "B", 5, 0, 5)])
    t = Cell(id=9, name="T", gx=4, gy=0, w=2, h=1)
    copy = trial_insert(region, t, 4, 0, gaps={0: 1})
    with pytest.raises(SegmentOverflow):
        sacs_shift(copy, Direction.LEFT)
    with pytest.raises(SegmentOverflow):
        multi_pass_shift(copy, Direction.LEFT)


def test_monotone_push(stacked_region):
    t = Cell(id=99, name="T", gx=12, gy=2, w=3, h=1)
    copy = trial_insert(stacked_region, t, 12, 2)
    left = sacs_shift(copy, Direction.LEFT)
    right = sacs_shift(copy, Direction.RIGHT)
    for cid, x in copy.positions.items():
        assert left.positions[cid] <= x
        assert right.positions[cid] >= x


def test_concurrent_phases_match_sequential(stacked_region):
    t = Cell(id=99, name="T", gx=12, gy=2, w=3, h=1)
    copy = trial_insert(stacked_region, t, 12, 2)
    _, _, sequential = shift_both_phases(copy)
    _, _, concurrent = shift_both_phases(copy, concurrent=True)
    assert sequential == concurrent
