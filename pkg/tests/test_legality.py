import math
import os
from collections import defaultdict

import pytest

from src.features.core.code import (
    Blockage,
    Cell,
    Placement,
    Rail,
    SiteGrid,
    average_displacement,
    check_legal,
    manhattan_displacement,
    rail_of,
    site_ratio,
)
from src.features.core.cli import fit_exponent
from src.features.core.errors import Unlegalizable
from src.features.ingest.code import parse_placement, write_placement
from src.features.ingest.synthetic import SyntheticSpec, generate_synthetic
from src.features.legalizer.code import legalize
from src.features.legalizer.config import LegalizeConfig


def random_messy_placement(rng):
    """Cells dropped anywhere, off-site and outside the grid included."""
    rows, sites = rng.randint(2, 6), rng.randint(10, 30)
    blockages = []
    for _ in range(rng.randint(0, 3)):
        s = rng.randrange(sites)
        blockages.append(Blockage(rng.randrange(rows), s, min(sites, s + rng.randint(1, 4))))
    grid = SiteGrid(num_rows=rows, num_sites=sites, blockages=tuple(blockages))
    cells = []
    for i in range(rng.randint(0, 15)):
        x = rng.randint(-2, sites) + (0.5 if rng.random() < 0.1 else 0.0)
        y = rng.randint(-1, rows)
        cells.append(Cell(
            id=i, name=f"c{i}", gx=x, gy=y, w=rng.randint(1, 5), h=rng.randint(1, 3),
            rail=rng.choice([Rail.ANY, Rail.ANY, Rail.P, Rail.G]), fixed=rng.random() < 0.1,
            cx=x, cy=y, legalized=True,
        ))
    return Placement(grid, cells)


def quadratic_violations(p):
    grid = p.grid
    found = set()
    for c in p.cells:
        if c.cx < 0 or c.cx + c.w > grid.num_sites or c.cy < 0 or c.cy + c.h > grid.num_rows:
            found.add(("out_of_bounds", (c.id,)))
        if c.fixed:
            continue
        if c.cx != math.floor(c.cx):
            found.add(("off_site", (c.id,)))
        if c.rail is not Rail.ANY and rail_of(grid, c.cy) is not c.rail:
            found.add(("rail_mismatch", (c.id,)))
        if any(b.row in c.rows and b.start < c.cx + c.w and c.cx < b.end for b in grid.blockages):
            found.add(("blockage", (c.id,)))
    for i, a in enumerate(p.cells):
        for b in p.cells[i + 1:]:
            shared = set(a.rows) & set(b.rows)
            if shared and a.cx < b.cx + b.w and b.cx < a.cx + a.w:
                found.add(("overlap", (min(a.id, b.id), max(a.id, b.id))))
    return sorted(found)


def test_check_legal_matches_pairwise_scan(rng):
    """Test the sweep-line checker against a quadratic scan of random placements."""
    for _ in range(500):
        p = random_messy_placement(rng)
        assert [(v.kind, v.cells) for v in check_legal(p)] == quadratic_violations(p)


def test_average_displacement_matches_grouping(rng):
    """Test the height-class average against a direct grouping."""
    for _ in range(300):
        p = random_messy_placement(rng)
        for c in p.cells:
            c.gx += rng.uniform(-4, 4)
            c.gy += rng.uniform(-1, 1)
        movable = [c for c in p.cells if not c.fixed]
        if not movable:
            continue
        ratio = site_ratio(p.grid)
        groups = defaultdict(list)
        for c in movable:
            groups[c.h].append(abs(c.cx - c.gx) * ratio + abs(c.cy - c.gy))
        expected = sum(sum(v) / len(v) for v in groups.values()) / max(groups)
        disp = average_displacement(p)
        assert disp.sam == pytest.approx(expected, rel=1e-12, abs=1e-12)
        assert disp.max_disp == pytest.approx(max(manhattan_displacement(c, ratio) for c in movable))


@pytest.mark.parametrize("density", [0.4, 0.6, 0.7])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_synthetic_runs_are_legal(density, seed):
    """Test that legalization of generated placements leaves no violation."""
    p = generate_synthetic(SyntheticSpec(num_cells=150, density=density, rng_seed=seed))
    out, report = legalize(p)
    assert check_legal(out) == []
    assert all(c.legalized for c in out.cells)
    assert report.cells_legalized == len(out.movable())
    assert report.sam >= 0.0


def test_parallel_run_matches_serial(synthetic_placement):
    """Test that insertion-point workers do not change the final placement."""
    serial, _ = legalize(synthetic_placement)
    parallel, _ = legalize(synthetic_placement, LegalizeConfig(parallelism=3))
    assert write_placement(parallel) == write_placement(serial)


def test_relegalizing_legal_output_is_a_no_op(synthetic_placement):
    out, _ = legalize(synthetic_placement)
    text = write_placement(out)
    again, report = legalize(parse_placement(text))
    assert write_placement(again) == text
    assert report.insertion_points_evaluated == 0


def test_legalization_tracks_every_stage(synthetic_placement):
    _, report = legalize(synthetic_placement)
    assert report.insertion_points_evaluated > 0
    assert report.runtime_ms >= sum(report.stage_times_ms.values()) - 1.0


@pytest.mark.slow
@pytest.mark.parametrize("num_cells", [10000, 20000])
def test_large_synthetic_runs_are_legal(num_cells):
    out, report = legalize(generate_synthetic(SyntheticSpec(num_cells=num_cells, rng_seed=1)))
    assert check_legal(out) == []
    assert report.fallbacks_used <= num_cells // 100


@pytest.mark.slow
def test_density_sweep(rng):
    """Test fifty generated instances across densities and height mixes."""
    mixes = [{1: 1.0}, {1: 0.8, 2: 0.2}, {1: 0.7, 2: 0.15, 3: 0.1, 4: 0.05}]
    legalized = 0
    for i in range(50):
        spec = SyntheticSpec(
            num_cells=rng.choice([1000, 2000, 5000]), density=rng.choice([0.2, 0.4, 0.6, 0.8, 0.9]),
            height_mix=rng.choice(mixes), rng_seed=i,
        )
        try:
            out, _ = legalize(generate_synthetic(spec))
        except Unlegalizable:
            continue
        legalized += 1
        assert check_legal(out) == []
    assert legalized >= 45


@pytest.mark.slow
def test_runtime_scales_near_linearly():
    sizes = [2000, 4000, 8000, 16000]
    runtimes = []
    for n in sizes:
        _, report = legalize(generate_synthetic(SyntheticSpec(num_cells=n, density=0.6, rng_seed=3)))
        runtimes.append(report.runtime_ms)
    assert fit_exponent(sizes, runtimes) <= 1.5


@pytest.mark.slow
@pytest.mark.timeout(600)
def test_100k_cells_legalize_within_two_minutes():
    """Test the single-worker wall time on a 100k-cell instance at density 0.6."""
    out, report = legalize(generate_synthetic(SyntheticSpec(num_cells=100_000, density=0.6, rng_seed=3)))
    assert report.runtime_ms < 120_000
    assert report.cells_legalized == len(out.movable())


@pytest.mark.slow
@pytest.mark.timeout(900)
@pytest.mark.skipif((os.cpu_count() or 1) < 2, reason="needs at least two cores")
def test_two_process_workers_speed_up_100k():
    """Test that two process workers beat one by 1.2x and place every cell identically."""
    placement = generate_synthetic(SyntheticSpec(num_cells=100_000, density=0.6, rng_seed=3))
    serial_out, serial = legalize(placement, LegalizeConfig(parallelism=1))
    parallel_out, parallel = legalize(placement, LegalizeConfig(parallelism=2, executor="process"))
    assert write_placement(parallel_out) == write_placement(serial_out)
    assert serial.runtime_ms / parallel.runtime_ms >= 1.2
