"""
Tests for commit, the greedy fallback, the legalization loop and its configuration.
"""

import logging

import pytest

from src.features.core.code import Blockage, Cell, Placement, SiteGrid, check_legal
from src.features.core.errors import ConfigError, NoFeasiblePoint, SnapInfeasible, Unlegalizable
from src.features.fop.code import find_optimal_position
from src.features.ingest.code import write_placement
from src.features.ingest.synthetic import SyntheticSpec, generate_synthetic
from src.features.region.code import RowIndex, Window, extract_local_region
from src.features.shift.code import trial_insert
from .code import Legalizer, commit_insertion, greedy_slot, legalize, reshift, snap_position
from .config import LegalizeConfig, env_name, load_config


def placed(cid, x, y, w, h=1):
    return Cell(id=cid, name=f"c{cid}", gx=x, gy=y, w=w, h=h, cx=x, cy=y, legalized=True)


@pytest.fixture
def pair_placement():
    grid = SiteGrid(num_rows=1, num_sites=20)
    target = Cell(id=99, name="T", gx=6, gy=0, w=4, h=1)
    return Placement(grid, [placed(0, 4, 0, 3), placed(1, 8, 0, 3), target])


def region_for(placement, target):
    g = placement.grid
    return extract_local_region(placement, Window(0, g.num_rows, 0, g.num_sites), target=target)


def test_commit_pair(pair_placement):
    target = pair_placement.cells[2]
    region = region_for(pair_placement, target)
    result = find_optimal_position(region, target)
    commit_insertion(pair_placement, region, target, result.point, result.x_star)
    a, b, t = pair_placement.cells
    assert (a.cx, t.cx, b.cx) == (3, 6, 10)
    assert t.legalized and t.cy == 0
    assert check_legal(pair_placement) == []


def test_snap_prefers_lower_curve(pair_placement):
    target = pair_placement.cells[2]
    region = region_for(pair_placement, target)
    point = find_optimal_position(region, target).point
    assert snap_position(region, target, point, 6.4) == 6.0
    assert snap_position(region, target, point, 100.0) == point.x_hi


def test_commit_into_empty_region():
    grid = SiteGrid(num_rows=1, num_sites=10)
    target = Cell(id=0, name="T", gx=3.3, gy=0, w=2, h=1)
    p = Placement(grid, [target])
    region = region_for(p, target)
    result = find_optimal_position(region, target)
    assert result.x_star == pytest.approx(3.3)
    commit_insertion(p, region, target, result.point, result.x_star)
    assert target.cx == 3.0


def test_commit_updates_row_index(pair_placement):
    target = pair_placement.cells[2]
    index = RowIndex.from_placement(pair_placement)
    region = extract_local_region(pair_placement, Window(0, 1, 0, 20), index=index, target=target)
    result = find_optimal_position(region, target)
    commit_insertion(pair_placement, region, target, result.point, result.x_star, index=index)
    assert [c.name for c in index.cells_in(0, 0, 20)] == ["c0", "T", "c1"]
    assert [x for x, _ in index.row_entries(0)] == [3, 6, 10]


def test_reshift_rounds_toward_global_then_clears_neighbours():
    grid = SiteGrid(num_rows=1, num_sites=10)
    a = Cell(id=0, name="A", gx=1.0, gy=0, w=2, h=1, cx=0, cy=0, legalized=True)
    b = Cell(id=1, name="B", gx=2.0, gy=0, w=2, h=1, cx=2, cy=0, legalized=True)
    target = Cell(id=9, name="T", gx=5.0, gy=0, w=1, h=1)
    p = Placement(grid, [a, b, target])
    copy = trial_insert(region_for(p, target), target, 5.0, 0, gaps={0: 2})
    positions = dict(copy.positions)
    positions[0] = 0.4
    assert reshift(copy, positions, p.by_id()) == {0: 1.0, 1: 3.0, 9: 5.0}


def test_commit_reshifts_fractional_positions(pair_placement, monkeypatch):
    target = pair_placement.cells[2]
    region = region_for(pair_placement, target)
    result = find_optimal_position(region, target)
    monkeypatch.setattr(
        "src.features.legalizer.code.shift_both_phases",
        lambda copy, concurrent=False: (None, None, {0: 2.6, 99: 6.0, 1: 10.0}),
    )
    commit_insertion(pair_placement, region, target, result.point, result.x_star)
    a, b, t = pair_placement.cells
    assert (a.cx, t.cx, b.cx) == (3, 6, 10)
    assert check_legal(pair_placement) == []


def test_commit_raises_when_reshift_cannot_fit(pair_placement, monkeypatch):
    target = pair_placement.cells[2]
    region = region_for(pair_placement, target)
    result = find_optimal_position(region, target)
    monkeypatch.setattr(
        "src.features.legalizer.code.shift_both_phases",
        lambda copy, concurrent=False: (None, None, {0: 2.6, 99: 6.0, 1: 18.5}),
    )
    with pytest.raises(SnapInfeasible):
        commit_insertion(pair_placement, region, target, result.point, result.x_star)
    a, b, t = pair_placement.cells
    assert (a.cx, b.cx) == (4, 8)
    assert not t.legalized


def test_greedy_slot_same_row():
    grid = SiteGrid(num_rows=2, num_sites=10)
    index = RowIndex.from_placement(Placement(grid, [placed(0, 0, 0, 6)]))
    assert greedy_slot(index, Cell(id=1, name="t", gx=2, gy=0, w=3, h=1)) == (6, 0)


def test_greedy_slot_next_row():
    grid = SiteGrid(num_rows=2, num_sites=10)
    index = RowIndex.from_placement(Placement(grid, [placed(0, 0, 0, 6)]))
    assert greedy_slot(index, Cell(id=1, name="t", gx=2, gy=0, w=5, h=1)) == (2, 1)


def test_greedy_slot_multi_row_needs_every_row():
    grid = SiteGrid(num_rows=2, num_sites=10, blockages=(Blockage(1, 0, 5),))
    index = RowIndex.from_placement(Placement(grid, []))
    assert greedy_slot(index, Cell(id=1, name="t", gx=1, gy=0, w=2, h=2)) == (5, 0)


def test_greedy_slot_full_grid():
    grid = SiteGrid(num_rows=1, num_sites=4, blockages=(Blockage(0, 0, 4),))
    index = RowIndex.from_placement(Placement(grid, []))
    assert greedy_slot(index, Cell(id=1, name="t", gx=0, gy=0, w=1, h=1)) is None


def test_single_cell_on_empty_grid():
    grid = SiteGrid(num_rows=4, num_sites=20)
    p = Placement(grid, [Cell(id=0, name="a", gx=3.4, gy=1.2, w=2, h=1)])
    out, report = legalize(p)
    cell = out.cells[0]
    assert (cell.cx, cell.cy) == (3.0, 1)
    assert report.sam == pytest.approx(0.6)
    assert report.cells_legalized == 1
    assert report.fallbacks_used == 0
    assert p.cells[0].legalized is False


def test_already_legal_input_is_unchanged():
    grid = SiteGrid(num_rows=2, num_sites=20)
    p = Placement(grid, [placed(0, 0, 0, 4), placed(1, 4, 0, 4), placed(2, 3, 1, 2)])
    out, report = legalize(p)
    assert [(c.cx, c.cy) for c in out.cells] == [(0, 0), (4, 0), (3, 1)]
    assert report.sam == 0.0
    assert report.insertion_points_evaluated == 0


def test_empty_placement_report():
    out, report = legalize(Placement(SiteGrid(num_rows=2, num_sites=10)))
    assert out.cells == []
    assert report.cells_legalized == 0
    assert report.sam == 0.0


def test_synthetic_run_is_legal_and_deterministic():
    p = generate_synthetic(SyntheticSpec(num_cells=200, density=0.5, rng_seed=2))
    first, report = legalize(p)
    second, _ = legalize(p)
    assert check_legal(first) == []
    assert all(c.legalized for c in first.cells)
    assert report.cells_legalized == len(first.movable())
    assert write_placement(first) == write_placement(second)
    assert set(report.stage_times_ms) == {"region", "fop", "commit"}


def test_tiny_window_falls_back():
    grid = SiteGrid(num_rows=1, num_sites=20)
    p = Placement(grid, [placed(0, 0, 0, 10), Cell(id=1, name="t", gx=2, gy=0, w=3, h=1)])
    cfg = LegalizeConfig(window_rows=1, window_sites=4, max_expand=0)
    out, report = legalize(p, cfg)
    assert report.fallbacks_used == 1
    assert out.cells[1].cx == 10
    assert check_legal(out) == []


def test_failures_expand_then_fall_back(mocker):
    grid = SiteGrid(num_rows=2, num_sites=20)
    p = Placement(grid, [Cell(id=0, name="t", gx=5, gy=0, w=2, h=1)])
    mocker.patch.object(Legalizer, "_try_window", side_effect=NoFeasiblePoint("nothing fits"))
    out, report = legalize(p, LegalizeConfig(max_expand=2))
    assert report.expansions == 2
    assert report.fallbacks_used == 1
    assert (out.cells[0].cx, out.cells[0].cy) == (5, 0)


def test_unlegalizable():
    grid = SiteGrid(num_rows=1, num_sites=4, blockages=(Blockage(0, 0, 4),))
    p = Placement(grid, [Cell(id=0, name="t", gx=0, gy=0, w=2, h=1)])
    with pytest.raises(Unlegalizable):
        legalize(p)


def test_oracle_check_stays_quiet(caplog):
    p = generate_synthetic(SyntheticSpec(num_cells=60, density=0.5, rng_seed=4))
    with caplog.at_level(logging.WARNING, logger="src.features.legalizer.code"):
        legalize(p, LegalizeConfig(oracle_check=True))
    assert "oracle disagrees" not in caplog.text


def test_config_defaults():
    cfg = load_config(environ={})
    assert cfg == LegalizeConfig()
    assert cfg.window.window_rows == 10
    assert cfg.window.max_expand == 4


def test_config_from_environment():
    cfg = load_config(environ={"LEGALIZER_PARALLEL_IP": "4", "LEGALIZER_SEED": "7", "LEGALIZER_WS": "3"})
    assert (cfg.parallelism, cfg.rng_seed, cfg.ws) == (4, 7, 3)
    assert env_name("window_rows") == "LEGALIZER_WINDOW_ROWS"


def test_overrides_beat_environment():
    cfg = load_config(overrides={"ws": 5, "prune": None}, environ={"LEGALIZER_WS": "3"})
    assert cfg.ws == 5
    assert cfg.prune is True


def test_invalid_config_names_the_field():
    with pytest.raises(ConfigError, match="ws"):
        load_config(environ={"LEGALIZER_WS": "1"})
    with pytest.raises(ConfigError, match="executor"):
        load_config(overrides={"executor": "gpu"}, environ={})


def test_config_from_env_file(tmp_path, monkeypatch):
    monkeypatch.setenv("LEGALIZER_WINDOW_ROWS", "0")
    monkeypatch.delenv("LEGALIZER_WINDOW_ROWS")
    env_file = tmp_path / ".env"
    env_file.write_text("LEGALIZER_WINDOW_ROWS=6\n")
    assert load_config(env_file=str(env_file)).window_rows == 6
