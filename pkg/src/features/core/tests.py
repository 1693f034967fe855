"""
Tests for the core model: grid rails, displacement metrics and legality checks.
"""

import random

import pytest

from .code import (
    Blockage,
    Cell,
    Placement,
    Rail,
    SiteGrid,
    Violation,
    average_displacement,
    check_legal,
    manhattan_displacement,
    rail_of,
    site_ratio,
)
from .errors import DuplicateIdError, EmptyPlacement, LegalizerError


@pytest.fixture
def grid():
    """Unit-ratio grid, 10 rows x 50 sites."""
    return SiteGrid(num_rows=10, num_sites=50)


def make_cell(cid, x, y, w=2, h=1, **kwargs):
    kwargs.setdefault("gx", x)
    kwargs.setdefault("gy", y)
    return Cell(id=cid, name=f"c{cid}", w=w, h=h, cx=x, cy=y, legalized=True, **kwargs)


def test_rails_alternate_from_first_rail():
    g = SiteGrid(num_rows=4, num_sites=10, first_rail=Rail.G)
    assert [rail_of(g, r) for r in range(4)] == [Rail.G, Rail.P, Rail.G, Rail.P]
    assert g.rail_of(0) is Rail.G


def test_site_ratio():
    g = SiteGrid(num_rows=4, num_sites=10, row_height=2.0, site_width=0.2)
    assert site_ratio(g) == pytest.approx(0.1)


def test_blockages_are_merged_per_row():
    g = SiteGrid(num_rows=2, num_sites=20, blockages=(
        Blockage(0, 5, 8), Blockage(0, 2, 5), Blockage(1, 0, 1), Blockage(0, 12, 14),
    ))
    assert g.blockages == (Blockage(0, 2, 8), Blockage(0, 12, 14), Blockage(1, 0, 1))
    assert g.blocked_by_row() == {0: [(2, 8), (12, 14)], 1: [(0, 1)]}


def test_cell_defaults_to_global_position():
    c = Cell(id=0, name="a", gx=3.2, gy=1.4, w=2, h=1)
    assert c.cx == 3.2
    assert c.cy == 1
    assert not c.legalized


def test_cell_rejects_zero_height():
    with pytest.raises(ValueError):
        Cell(id=0, name="a", gx=0, gy=0, w=2, h=0)


def test_duplicate_names_rejected(grid):
    with pytest.raises(DuplicateIdError):
        Placement(grid, [make_cell(0, 0, 0), Cell(id=1, name="c0", gx=4, gy=0, w=1, h=1)])


def test_manhattan_displacement():
    c = Cell(id=0, name="a", gx=10, gy=20, w=1, h=1, cx=13, cy=18)
    assert manhattan_displacement(c) == 5
    c.cx, c.cy = 10, 20
    assert manhattan_displacement(c) == 0


def test_manhattan_displacement_scales_x():
    c = Cell(id=0, name="a", gx=10, gy=2, w=1, h=1, cx=20, cy=3)
    assert manhattan_displacement(c, ratio=0.1) == pytest.approx(2.0)


def test_average_displacement_two_height_classes(grid):
    """Two single-row cells moved 2 and 4, one double-row cell moved 3."""
    cells = [
        make_cell(0, 2, 0, gx=0),
        make_cell(1, 14, 0, gx=10),
        make_cell(2, 23, 2, h=2, gx=20),
    ]
    disp = average_displacement(Placement(grid, cells))
    assert disp.sam == 3
    assert disp.per_height == {1: 3.0, 2: 3.0}
    assert disp.max_disp == 4


def test_average_displacement_zero(grid):
    disp = average_displacement(Placement(grid, [make_cell(0, 1, 1), make_cell(1, 5, 3, h=2)]))
    assert disp.sam == 0


def test_average_displacement_skips_empty_classes(grid):
    """H is 3 but there are no double-row cells."""
    cells = [make_cell(0, 1, 0, gx=0), make_cell(1, 10, 0, h=3, gx=7)]
    disp = average_displacement(Placement(grid, cells))
    assert disp.sam == pytest.approx((1 + 3) / 3)


def test_average_displacement_ignores_fixed_cells(grid):
    cells = [make_cell(0, 1, 0, gx=0), Cell(id=1, name="f", gx=20, gy=0, w=2, h=4, fixed=True)]
    assert average_displacement(Placement(grid, cells)).sam == 1


def test_average_displacement_empty(grid):
    with pytest.raises(EmptyPlacement):
        average_displacement(Placement(grid, []))
    assert issubclass(EmptyPlacement, LegalizerError)


def test_average_displacement_order_invariant(grid):
    rng = random.Random(7)
    cells = [make_cell(i, rng.randrange(40), rng.randrange(8), h=rng.choice([1, 2]),
                       gx=rng.uniform(0, 40), gy=rng.uniform(0, 8)) for i in range(30)]
    shuffled = cells[:]
    rng.shuffle(shuffled)
    assert average_displacement(Placement(grid, cells)).sam == average_displacement(Placement(grid, shuffled)).sam


def test_check_legal_identical_cells_overlap(grid):
    p = Placement(grid, [make_cell(0, 4, 1), make_cell(1, 4, 1)])
    assert check_legal(p) == [Violation("overlap", (0, 1))]


def test_check_legal_single_cell(grid):
    assert check_legal(Placement(grid, [make_cell(0, 4, 1)])) == []


def test_check_legal_abutting_cells_are_legal(grid):
    assert check_legal(Placement(grid, [make_cell(0, 4, 1), make_cell(1, 6, 1)])) == []


def test_check_legal_reports_every_kind():
    g = SiteGrid(num_rows=4, num_sites=20, blockages=(Blockage(2, 10, 12),))
    cells = [
        make_cell(0, 19, 0),                    # out of bounds
        make_cell(1, 3.5, 0),                   # off site
        make_cell(2, 0, 1, h=2, rail=Rail.P),   # row 1 is G
        make_cell(3, 11, 2),                    # on the blockage
    ]
    kinds = {v.kind: v.cells for v in check_legal(Placement(g, cells))}
    assert kinds == {
        "out_of_bounds": (0,),
        "off_site": (1,),
        "rail_mismatch": (2,),
        "blockage": (3,),
    }


def test_check_legal_multi_row_overlap(grid):
    """A double-row cell overlaps a single-row cell in its upper row only."""
    p = Placement(grid, [make_cell(0, 0, 0, w=4, h=2), make_cell(1, 3, 1)])
    assert check_legal(p) == [Violation("overlap", (0, 1))]


def test_fixed_cells_still_overlap(grid):
    fixed = Cell(id=1, name="f", gx=5, gy=1, w=3, h=1, fixed=True)
    p = Placement(grid, [make_cell(0, 4, 1), fixed])
    assert check_legal(p) == [Violation("overlap", (0, 1))]


def test_copy_is_independent(grid):
    p = Placement(grid, [make_cell(0, 4, 1)])
    q = p.copy()
    q.cells[0].cx = 9
    assert p.cells[0].cx == 4
