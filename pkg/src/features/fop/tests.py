"""
Tests for insertion points, displacement curves, the breakpoint pipeline and
the optimal position search.
"""

import math
import random
from itertools import product

import pytest

from src.features.core.code import Blockage, Cell, Placement, Rail, SiteGrid, rail_of
from src.features.core.errors import EmptyCurve, NoFeasiblePoint, OutOfSegment, SegmentOverflow
from src.features.region.code import Window, extract_local_region
from src.features.shift.code import Direction, combine_phases, multi_pass_shift, trial_insert
from .code import build_displacement_curves, enumerate_insertion_points, find_optimal_position
from .oracle import positional_oracle, total_displacement
from .pipeline import (
    Breakpoint,
    calculate_value,
    fused_forward_backward,
    gap_slopes,
    merge_breakpoints,
    six_op,
    sort_breakpoints,
    sum_slopes_l,
    sum_slopes_r,
)


def placed(cid, x, y, w, h=1, gx=None):
    return Cell(id=cid, name=f"c{cid}", gx=x if gx is None else gx, gy=y, w=w, h=h, cx=x, cy=y, legalized=True)


def region_of(grid, cells):
    return extract_local_region(Placement(grid, cells), Window(0, grid.num_rows, 0, grid.num_sites))


def random_breakpoints(rng, n):
    return [Breakpoint(float(rng.randint(0, 30)), rng.choice([-1, 0]), rng.choice([0, 1])) for _ in range(n)]


# --- pipeline -------------------------------------------------------------

def test_sort_breakpoints():
    assert sort_breakpoints([]) == []
    bps = [Breakpoint(1, -1, 0), Breakpoint(3, 0, 1)]
    assert sort_breakpoints(bps) == bps
    rng = random.Random(0)
    shuffled = random_breakpoints(rng, 40)
    assert [b.x for b in sort_breakpoints(shuffled)] == sorted(b.x for b in shuffled)


def test_merge_identical_x():
    merged = merge_breakpoints([Breakpoint(5, -1, 0), Breakpoint(5, 0, 1), Breakpoint(7, -1, 1)])
    assert [(m.x, m.slope_l, m.slope_r) for m in merged] == [(5, -1, 1), (7, -1, 1)]


def test_merge_singleton():
    merged = merge_breakpoints([Breakpoint(2, -1, 1)])
    assert [(m.x, m.slope_l, m.slope_r) for m in merged] == [(2, -1, 1)]


def test_merge_conserves_slopes():
    rng = random.Random(1)
    for _ in range(100):
        bps = sort_breakpoints(random_breakpoints(rng, rng.randint(1, 30)))
        merged = merge_breakpoints(bps)
        assert sum(m.slope_l for m in merged) == sum(b.slope_l for b in bps)
        assert sum(m.slope_r for m in merged) == sum(b.slope_r for b in bps)
        xs = [m.x for m in merged]
        assert xs == sorted(set(xs))


def test_prefix_and_suffix_sums():
    assert sum_slopes_r([]) == []
    single = sum_slopes_r(merge_breakpoints([Breakpoint(4, -1, 1)]))
    assert single[0].slopes_r_prefix == 1
    rng = random.Random(2)
    for _ in range(50):
        merged = merge_breakpoints(sort_breakpoints(random_breakpoints(rng, 20)))
        sum_slopes_r(merged)
        sum_slopes_l(merged)
        for i, m in enumerate(merged):
            assert m.slopes_r_prefix == sum(k.slope_r for k in merged[:i + 1])
            assert m.slopes_l_suffix == sum(k.slope_l for k in merged[i:])


def test_lone_v():
    v = [Breakpoint(10, -1, 1)]
    assert six_op(v, lambda x: abs(x - 10), 8, 12) == (10, 0)
    assert fused_forward_backward(v, lambda x: abs(x - 10), 8, 12) == (10, 0)


def test_clamped_v():
    v = [Breakpoint(11, -1, 1)]
    assert six_op(v, lambda x: abs(x - 10), 11, 12) == (11, 1)
    assert fused_forward_backward(v, lambda x: abs(x - 10), 11, 12) == (11, 1)


def test_flat_curve_takes_leftmost():
    flat = [Breakpoint(3, 0, 0), Breakpoint(6, 0, 0)]
    assert six_op(flat, lambda x: 2.0, 1, 9) == (1, 2.0)
    assert fused_forward_backward(flat, lambda x: 2.0, 1, 9) == (1, 2.0)


def test_empty_curve():
    with pytest.raises(EmptyCurve):
        fused_forward_backward([])
    with pytest.raises(EmptyCurve):
        calculate_value([])


def test_fused_is_bit_identical_to_six_op():
    rng = random.Random(3)
    for _ in range(500):
        bps = sort_breakpoints([
            Breakpoint(rng.uniform(0, 50) if rng.random() < 0.5 else float(rng.randint(0, 50)),
                       rng.choice([-1, 0, 0, 1]), rng.choice([-1, 0, 1, 1]))
            for _ in range(rng.randint(1, 25))
        ])
        offset = rng.uniform(0, 100)
        lo = bps[0].x - rng.uniform(0, 5)
        hi = bps[-1].x + rng.uniform(0, 5)
        assert fused_forward_backward(bps, lambda x: offset, lo, hi) == six_op(bps, lambda x: offset, lo, hi)


def test_values_are_self_consistent():
    rng = random.Random(4)
    for _ in range(100):
        targets = [rng.uniform(0, 40) for _ in range(rng.randint(1, 8))]

        def curve(x, targets=targets):
            return sum(abs(x - t) for t in targets)

        bps = [Breakpoint(t, -1, 1) for t in targets]
        merged = merge_breakpoints(sort_breakpoints(bps))
        sum_slopes_r(merged)
        sum_slopes_l(merged)
        calculate_value(merged, curve)
        assert merged[-1].value == pytest.approx(curve(merged[-1].x), abs=1e-9)
        slopes = gap_slopes(merged)
        assert all(s in range(-len(targets), len(targets) + 1, 2) for s in slopes)


# --- insertion points and curves ------------------------------------------

def test_two_insertion_points_around_one_cell():
    grid = SiteGrid(num_rows=1, num_sites=10)
    region = region_of(grid, [placed(0, 4, 0, 3)])
    target = Cell(id=9, name="t", gx=4, gy=0, w=2, h=1)
    points = enumerate_insertion_points(region, target)
    assert [(iv.lo, iv.hi) for ip in points for iv in ip.intervals] == [(0, 4), (7, 10)]
    assert [(ip.x_lo, ip.x_hi) for ip in points] == [(0, 5), (3, 8)]


def test_no_room_for_wide_target():
    grid = SiteGrid(num_rows=1, num_sites=10)
    region = region_of(grid, [placed(0, 4, 0, 3)])
    target = Cell(id=9, name="t", gx=4, gy=0, w=8, h=1)
    assert enumerate_insertion_points(region, target) == []
    with pytest.raises(NoFeasiblePoint):
        find_optimal_position(region, target)


def test_rail_limits_bottom_rows():
    grid = SiteGrid(num_rows=4, num_sites=10, first_rail=Rail.P)
    region = region_of(grid, [])
    target = Cell(id=9, name="t", gx=0, gy=0, w=2, h=2, rail=Rail.G)
    assert [ip.bottom_row for ip in enumerate_insertion_points(region, target)] == [1]


def test_multi_row_target_needs_compatible_gaps():
    """A double-row cell splits both rows; the target cannot straddle it."""
    grid = SiteGrid(num_rows=2, num_sites=12)
    region = region_of(grid, [placed(0, 5, 0, 2, h=2)])
    target = Cell(id=9, name="t", gx=0, gy=0, w=2, h=2)
    points = enumerate_insertion_points(region, target)
    assert [tuple(iv.gap for iv in ip.intervals) for ip in points] == [(0, 0), (1, 1)]


def random_packed_region(rng):
    """Non-overlapping cells of height 1 or 2 dropped onto a small empty grid."""
    grid = SiteGrid(num_rows=rng.randint(1, 3), num_sites=rng.randint(6, 12), first_rail=rng.choice([Rail.P, Rail.G]))
    taken = set()
    cells = []
    for i in range(rng.randint(0, 6)):
        w, h = rng.randint(1, 3), rng.randint(1, min(2, grid.num_rows))
        x, y = rng.randint(0, grid.num_sites - w), rng.randint(0, grid.num_rows - h)
        spots = {(r, s) for r in range(y, y + h) for s in range(x, x + w)}
        if spots & taken:
            continue
        taken |= spots
        cells.append(placed(i, x, y, w, h=h, gx=x + rng.uniform(-2, 2)))
    return region_of(grid, cells)


def feasible_by_scan(region, target):
    """Every (bottom row, integer x) where some gap choice shifts the row contents legal."""
    found = set()
    for row in range(region.grid.num_rows - target.h + 1):
        if target.rail is not Rail.ANY and rail_of(region.grid, row) is not target.rail:
            continue
        spanned = range(row, row + target.h)
        choices = [range(len(region.segment(r).cells) + 1) for r in spanned]
        for x in range(region.grid.num_sites - target.w + 1):
            for combo in product(*choices):
                try:
                    copy = trial_insert(region, target, float(x), row, gaps=dict(zip(spanned, combo)))
                    left = multi_pass_shift(copy, Direction.LEFT)
                    right = multi_pass_shift(copy, Direction.RIGHT)
                    pos = combine_phases(copy, left, right)
                except (OutOfSegment, SegmentOverflow):
                    continue
                if all(pos[a] + copy.widths[a] <= pos[b] for ids in copy.rows.values() for a, b in zip(ids, ids[1:])):
                    found.add((row, x))
                    break
    return found


def test_insertion_points_cover_exactly_the_feasible_positions():
    """Test enumeration against trying every row, site and gap choice on random regions."""
    rng = random.Random(17)
    for _ in range(150):
        region = random_packed_region(rng)
        target = Cell(id=99, name="t", gx=rng.uniform(0, 6), gy=0, w=rng.randint(1, 3),
                      h=rng.randint(1, region.grid.num_rows), rail=rng.choice([Rail.ANY, Rail.ANY, Rail.P, Rail.G]))
        enumerated = {
            (ip.bottom_row, x)
            for ip in enumerate_insertion_points(region, target)
            for x in range(math.ceil(ip.x_lo), math.floor(ip.x_hi) + 1)
        }
        assert enumerated == feasible_by_scan(region, target)


def test_lone_target_curve():
    grid = SiteGrid(num_rows=1, num_sites=20, blockages=(Blockage(0, 0, 8), Blockage(0, 13, 20)))
    region = region_of(grid, [])
    target = Cell(id=9, name="t", gx=10, gy=0, w=1, h=1)
    (ip,) = enumerate_insertion_points(region, target)
    assert (ip.x_lo, ip.x_hi) == (8, 12)
    curves = build_displacement_curves(region, target, ip)
    assert curves.breakpoints == [Breakpoint(10, -1, 1)]
    result = find_optimal_position(region, target)
    assert (result.x_star, result.v_star) == (10, 0)


def test_unmoved_left_cell_has_one_kink():
    grid = SiteGrid(num_rows=1, num_sites=20)
    region = region_of(grid, [placed(0, 2, 0, 3)])
    target = Cell(id=9, name="t", gx=8, gy=0, w=2, h=1)
    ip = [p for p in enumerate_insertion_points(region, target) if p.intervals[0].gap == 1][0]
    curves = build_displacement_curves(region, target, ip)
    assert Breakpoint(5, -1, 0) in curves.breakpoints
    assert len(curves.breakpoints) == 2


def test_curves_match_shifting_at_integer_positions():
    rng = random.Random(5)
    for _ in range(60):
        n = rng.randint(15, 30)
        cells = []
        x = rng.randint(0, 2)
        for i in range(rng.randint(1, 5)):
            w = rng.randint(1, 4)
            if x + w > n:
                break
            cells.append(placed(i, x, 0, w, gx=x + rng.uniform(-3, 3)))
            x += w + rng.randint(0, 3)
        region = region_of(SiteGrid(num_rows=1, num_sites=n), cells)
        target = Cell(id=99, name="t", gx=rng.uniform(0, n - 2), gy=0, w=rng.randint(1, 3), h=1)
        for ip in enumerate_insertion_points(region, target):
            curves = build_displacement_curves(region, target, ip)
            xt = float(int(ip.x_lo))
            while xt <= ip.x_hi:
                if xt >= ip.x_lo:
                    assert curves.evaluate(xt) == pytest.approx(total_displacement(region, target, ip, xt), abs=1e-9)
                xt += 1.0


# --- optimal position -----------------------------------------------------

@pytest.fixture
def pair():
    grid = SiteGrid(num_rows=1, num_sites=20)
    region = region_of(grid, [placed(0, 4, 0, 3), placed(1, 8, 0, 3)])
    return region, Cell(id=99, name="t", gx=6, gy=0, w=4, h=1)


def test_pair_optimum(pair):
    region, target = pair
    result = find_optimal_position(region, target)
    assert result.point.intervals[0].gap == 1
    assert (result.x_star, result.v_star) == (6, 3)


def test_oracle_agrees_on_pair(pair):
    region, target = pair
    result = find_optimal_position(region, target)
    x, v = positional_oracle(region, target, result.point)
    assert (x, v) == (6, 3)


def test_oracle_on_empty_region():
    grid = SiteGrid(num_rows=1, num_sites=20)
    region = region_of(grid, [])
    target = Cell(id=9, name="t", gx=7.5, gy=0, w=2, h=1)
    (ip,) = enumerate_insertion_points(region, target)
    x, v = positional_oracle(region, target, ip)
    assert (x, v) == (7.5, 0)


def test_equal_values_pick_leftmost_point():
    grid = SiteGrid(num_rows=1, num_sites=10)
    region = region_of(grid, [placed(0, 4, 0, 2)])
    target = Cell(id=9, name="t", gx=4, gy=0, w=2, h=1)
    for n in (1, 2, 4):
        result = find_optimal_position(region, target, parallelism=n)
        assert (result.x_star, result.v_star) == (2, 2)
        assert result.point.intervals[0].gap == 0


def test_single_point():
    grid = SiteGrid(num_rows=1, num_sites=20, blockages=(Blockage(0, 0, 8), Blockage(0, 13, 20)))
    region = region_of(grid, [])
    target = Cell(id=9, name="t", gx=3, gy=0, w=1, h=1)
    result = find_optimal_position(region, target)
    assert result.point.index == 0
    assert (result.x_star, result.v_star) == (8, 5)


def test_vertical_term_and_site_ratio():
    grid = SiteGrid(num_rows=3, num_sites=20, row_height=2.0, site_width=0.5)
    region = region_of(grid, [])
    target = Cell(id=9, name="t", gx=4, gy=0.75, w=2, h=1)
    result = find_optimal_position(region, target)
    assert result.point.bottom_row == 1
    assert result.v_star == pytest.approx(0.25)


def test_pruning_does_not_change_the_answer(pair):
    region, target = pair
    assert find_optimal_position(region, target, prune=False).key == find_optimal_position(region, target).key
