"""
Tests for the placement file format, the synthetic generator and run reports.
"""

import json
import random

import pytest

from src.features.core.code import Blockage, Cell, Placement, Rail, SiteGrid, Violation
from src.features.core.errors import (
    ConfigError,
    DuplicateIdError,
    FormatSyntaxError,
    InfeasibleSpec,
    SemanticError,
)
from src.features.legalizer.code import RunReport
from .code import format_number, parse_placement, write_placement
from .report import format_report, placement_stats, report_to_dict
from .synthetic import SyntheticSpec, generate_synthetic, measured_density

MINIMAL = "GRID 4 1.0 1.0 20 P\nCELL a 3.2 1.4 2 1 ANY 0\n"


def test_parse_minimal_file():
    p = parse_placement(MINIMAL)
    assert p.grid.num_rows == 4
    assert p.grid.num_sites == 20
    assert len(p.movable()) == 1
    cell = p.cells[0]
    assert (cell.name, cell.gx, cell.gy, cell.w, cell.h) == ("a", 3.2, 1.4, 2, 1)
    assert cell.rail is Rail.ANY
    assert not cell.legalized


def test_parse_accepts_bytes_and_comments():
    text = b"# header\nGRID 2 2.0 0.5 10 G  # grid\n\nCELL x 1 0 1 1 G 0\n"
    p = parse_placement(text)
    assert p.grid.first_rail is Rail.G
    assert p.grid.row_height == 2.0
    assert p.cells[0].rail is Rail.G


def test_zero_height_is_semantic_error():
    with pytest.raises(SemanticError) as err:
        parse_placement("CELL a 0 0 2 0 ANY 0")
    assert err.value.line == 1
    assert err.value.column == 14


def test_bad_rail_token():
    with pytest.raises(SemanticError, match="invalid rail"):
        parse_placement("GRID 4 1 1 20 P\nCELL a 0 0 2 1 VDD 0\n")


def test_blockage_outside_grid():
    with pytest.raises(SemanticError) as err:
        parse_placement("GRID 4 1 1 20 P\nBLOCK 4 0 2\n")
    assert err.value.line == 2


def test_malformed_number_reports_position():
    with pytest.raises(FormatSyntaxError) as err:
        parse_placement("GRID 4 1 1 20 P\nCELL a x 0 2 1 ANY 0\n")
    assert (err.value.line, err.value.column) == (2, 8)
    assert "line 2, column 8" in str(err.value)


def test_wrong_field_count():
    with pytest.raises(FormatSyntaxError, match="CELL takes 7 or 9 fields"):
        parse_placement("GRID 4 1 1 20 P\nCELL a 0 0 2 1 ANY\n")


def test_unknown_keyword():
    with pytest.raises(FormatSyntaxError, match="unknown keyword"):
        parse_placement("GRID 4 1 1 20 P\nNET n1 a b\n")


def test_missing_grid():
    with pytest.raises(FormatSyntaxError, match="missing GRID"):
        parse_placement("CELL a 0 0 2 1 ANY 0\n")


def test_duplicate_cell_name():
    with pytest.raises(DuplicateIdError) as err:
        parse_placement("GRID 4 1 1 20 P\nCELL a 0 0 2 1 ANY 0\nCELL a 5 0 2 1 ANY 0\n")
    assert err.value.line == 3


def test_fixed_cell_needs_integral_row():
    with pytest.raises(SemanticError, match="integral row"):
        parse_placement("GRID 4 1 1 20 P\nCELL f 0 0.5 2 1 ANY 1\n")


def test_legalized_position_is_read():
    p = parse_placement("GRID 4 1 1 20 P\nCELL a 3.2 1.4 2 1 ANY 0 3 1\n")
    cell = p.cells[0]
    assert cell.legalized
    assert (cell.cx, cell.cy) == (3.0, 1)


def test_write_empty_placement_is_header_only():
    p = Placement(SiteGrid(num_rows=3, num_sites=12, row_height=2.0, site_width=0.2))
    assert write_placement(p) == "GRID 3 2 0.2 12 P\n"


def test_write_one_cell():
    p = parse_placement(MINIMAL)
    assert write_placement(p) == "GRID 4 1 1 20 P\nCELL a 3.2 1.4 2 1 ANY 0\n"


def test_write_sorted_by_id_with_blocks():
    grid = SiteGrid(num_rows=4, num_sites=20, blockages=(Blockage(1, 4, 6),))
    cells = [
        Cell(id=1, name="b", gx=7.5, gy=0, w=1, h=1, cx=8, cy=0, legalized=True),
        Cell(id=0, name="a", gx=0, gy=2, w=2, h=2, rail=Rail.P, fixed=True),
    ]
    assert write_placement(Placement(grid, cells)) == (
        "GRID 4 1 1 20 P\n"
        "BLOCK 1 4 6\n"
        "CELL a 0 2 2 2 P 1\n"
        "CELL b 7.5 0 1 1 ANY 0 8 0\n"
    )


def test_format_number():
    assert format_number(3.0) == "3"
    assert format_number(0.1) == "0.1"
    assert format_number(-2) == "-2"


def test_round_trip_legalized_placements():
    rng = random.Random(11)
    for _ in range(100):
        lines = [f"GRID {rng.randint(2, 8)} {rng.choice(['1', '2', '0.5'])} 1 {rng.randint(10, 40)} P"]
        for i in range(rng.randint(0, 12)):
            gx = round(rng.uniform(0, 10), rng.randint(0, 3))
            gy = round(rng.uniform(0, 1), rng.randint(0, 3))
            lines.append(f"CELL n{i} {gx} {gy} {rng.randint(1, 4)} 1 ANY 0 {rng.randint(0, 9)} 0")
        text = "\n".join(lines) + "\n"
        once = write_placement(parse_placement(text))
        assert write_placement(parse_placement(once)) == once


def test_synthetic_empty():
    p = generate_synthetic(SyntheticSpec(num_cells=0))
    assert p.cells == []


def test_synthetic_is_deterministic():
    spec = SyntheticSpec(num_cells=300, rng_seed=5)
    assert write_placement(generate_synthetic(spec)) == write_placement(generate_synthetic(spec))


def test_synthetic_density_tolerance():
    p = generate_synthetic(SyntheticSpec(num_cells=3000, density=0.5, rng_seed=1))
    assert 0.48 <= measured_density(p) <= 0.52


def test_synthetic_cells_fit_and_carry_rails():
    p = generate_synthetic(SyntheticSpec(num_cells=500, rng_seed=3, blockage_fraction=0.05))
    g = p.grid
    assert g.blockages
    assert {c.h for c in p.cells} > {1}
    for c in p.cells:
        assert 0 <= c.gx <= g.num_sites - c.w
        assert 0 <= c.gy <= g.num_rows - c.h
        assert (c.rail is Rail.ANY) == (c.h % 2 == 1)


def test_synthetic_invalid_spec():
    with pytest.raises(ConfigError):
        generate_synthetic(SyntheticSpec(num_cells=10, density=1.5))
    with pytest.raises(ConfigError):
        generate_synthetic(SyntheticSpec(num_cells=10, height_mix={1: 0.5}))


def test_synthetic_infeasible():
    with pytest.raises(InfeasibleSpec):
        generate_synthetic(SyntheticSpec(num_cells=200, num_rows=2, num_sites=10, height_mix={1: 1.0}))


def test_synthetic_given_grid_derives_cell_count():
    """Test that a fixed grid without a cell count is filled to the requested density."""
    p = generate_synthetic(SyntheticSpec(num_rows=40, num_sites=400, density=0.5, rng_seed=2))
    assert (p.grid.num_rows, p.grid.num_sites) == (40, 400)
    assert abs(measured_density(p) - 0.5) <= 0.02


def test_synthetic_given_grid_rejects_density_mismatch():
    with pytest.raises(ConfigError, match="leave num_cells out"):
        generate_synthetic(SyntheticSpec(num_cells=50, num_rows=40, num_sites=400, density=0.5))


def test_synthetic_needs_a_count_or_a_grid():
    with pytest.raises(ConfigError, match="num_cells is required"):
        generate_synthetic(SyntheticSpec(density=0.5))


def test_report_keys_and_values():
    report = RunReport(
        sam=0.5, max_disp=2.0, per_height_sam={1: 0.25, 2: 0.75}, cells_legalized=3,
        fallbacks_used=1, expansions=2, insertion_points_evaluated=40,
        stage_times_ms={"region": 1.0, "fop": 2.0, "commit": 0.5}, runtime_ms=4.0,
    )
    doc = json.loads(format_report(report, [Violation("overlap", (1, 2))]))
    assert sorted(doc) == sorted([
        "sam", "maxDisp", "perHeightSam", "cellsLegalized", "fallbacksUsed", "expansions",
        "insertionPointsEvaluated", "stageTimesMs", "runtimeMs", "violations",
    ])
    assert doc["perHeightSam"] == {"1": 0.25, "2": 0.75}
    assert doc["violations"] == [{"kind": "overlap", "cells": [1, 2], "detail": ""}]
    assert report_to_dict(report)["violations"] == []


def test_placement_stats():
    p = parse_placement(
        "GRID 4 1 1 10 P\nBLOCK 0 0 2\n"
        "CELL a 0 0 2 1 ANY 0 2 0\nCELL b 0 1 2 2 ANY 0\nCELL f 8 0 2 1 ANY 1\n"
    )
    stats = placement_stats(p)
    assert (stats.cells, stats.movable, stats.fixed, stats.legalized) == (3, 2, 1, 1)
    assert stats.per_height == {1: 1, 2: 1}
    assert stats.density == pytest.approx(6 / 36)
    assert not stats.fully_legalized
    assert "legalized: 1/2" in stats.lines()
