"""
Tests for SVG rendering.
"""

from src.features.core.code import Blockage, Cell, Placement, SiteGrid
from .code import DEFAULT_COLOUR, PALETTE, colour_for, render_svg


def test_palette_lookup():
    assert colour_for(1) == PALETTE[1]
    assert colour_for(7) == DEFAULT_COLOUR


def test_empty_placement_renders_grid_only():
    svg = render_svg(Placement(SiteGrid(num_rows=3, num_sites=10)))
    assert "<svg" in svg
    assert 'id="cell-' not in svg
    assert 'id="block-' not in svg


def test_one_group_per_cell_and_blockage():
    grid = SiteGrid(num_rows=2, num_sites=10, blockages=(Blockage(1, 0, 3),))
    p = Placement(grid, [Cell(id=0, name="a", gx=4, gy=0, w=2, h=2, cx=4, cy=0, legalized=True)])
    svg = render_svg(p)
    assert svg.count('id="cell-a"') == 1
    assert svg.count('id="block-0"') == 1


def test_header_names_palette():
    svg = render_svg(Placement(SiteGrid(num_rows=1, num_sites=4)))
    header = svg[:svg.find("<svg")]
    assert "4 px per site, 10 px per row" in header
    assert f"h2={PALETTE[2]}" in header


def test_output_is_deterministic():
    grid = SiteGrid(num_rows=4, num_sites=30)
    cells = [
        Cell(id=i, name=f"c{i}", gx=3 * i, gy=i % 3, w=2, h=1 + i % 2, cx=3 * i, cy=i % 3, legalized=True)
        for i in range(6)
    ]
    p = Placement(grid, cells)
    assert render_svg(p) == render_svg(p)
