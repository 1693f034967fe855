import json
import logging
import re
from pathlib import Path

import pytest
from click.testing import CliRunner

from src.features.core.cli import cli, configure_logging, fit_exponent
from src.features.ingest.code import parse_placement

GOLDEN = Path(__file__).parent / "golden"

SVG_CELL = re.compile(r'<g id="(cell-[^"]+)">\s*<path d="([^"]*)"[^>]*?style="fill: (#[0-9a-f]{6})')


@pytest.fixture
def runner():
    return CliRunner()


def test_legalize_pair(runner, pair_file, tmp_path):
    """Test legalizing a file end to end, report included."""
    out = tmp_path / "out.pl"
    report = tmp_path / "report.json"
    result = runner.invoke(cli, ['--log-level', 'ERROR', 'legalize', str(pair_file),
                                 '-o', str(out), '--report', str(report)])
    assert result.exit_code == 0, result.output
    cells = {c.name: c for c in parse_placement(out.read_text()).cells}
    assert (cells['A'].cx, cells['T'].cx, cells['B'].cx) == (3, 6, 10)
    doc = json.loads(report.read_text())
    assert doc['cellsLegalized'] == 3
    assert doc['violations'] == []
    assert doc['sam'] == pytest.approx(1.0)


def test_legalize_accepts_config_flags(runner, pair_file, tmp_path):
    out = tmp_path / "out.pl"
    result = runner.invoke(cli, ['--log-level', 'ERROR', 'legalize', str(pair_file), '-o', str(out),
                                 '--window-rows', '1', '--window-sites', '20', '--parallel-ip', '2'])
    assert result.exit_code == 0, result.output
    assert "CELL T 6 0 4 1 ANY 0 6 0" in out.read_text()


def test_check_reports_overlap(runner, overlapping_file):
    """Test that check names the overlapping pair and exits 1."""
    result = runner.invoke(cli, ['check', str(overlapping_file)])
    assert result.exit_code == 1
    assert "overlap A,B" in result.output


def test_check_legal_file(runner, pair_file, tmp_path):
    out = tmp_path / "out.pl"
    runner.invoke(cli, ['--log-level', 'ERROR', 'legalize', str(pair_file), '-o', str(out)])
    result = runner.invoke(cli, ['check', str(out)])
    assert result.exit_code == 0
    assert "legal" in result.output


def test_malformed_input_exits_2(runner, tmp_path):
    bad = tmp_path / "bad.pl"
    bad.write_text("GRID 4 1 1 20 P\nCELL a x 0 2 1 ANY 0\n")
    result = runner.invoke(cli, ['check', str(bad)])
    assert result.exit_code == 2
    assert "error: line 2, column 8" in result.output


def test_missing_file_exits_2(runner, tmp_path):
    result = runner.invoke(cli, ['stats', str(tmp_path / "nope.pl")])
    assert result.exit_code == 2


def test_invalid_config_exits_2(runner, pair_file):
    result = runner.invoke(cli, ['legalize', str(pair_file), '--ws', '1'])
    assert result.exit_code == 2
    assert "ws" in result.output


def test_stats_on_legalized_file(runner, pair_file, tmp_path):
    out = tmp_path / "out.pl"
    runner.invoke(cli, ['--log-level', 'ERROR', 'legalize', str(pair_file), '-o', str(out)])
    result = runner.invoke(cli, ['stats', str(out)])
    assert result.exit_code == 0
    assert "sam: 1.000000" in result.output


def test_svg_output(runner, pair_file, tmp_path):
    svg = tmp_path / "pair.svg"
    result = runner.invoke(cli, ['svg', str(pair_file), '-o', str(svg)])
    assert result.exit_code == 0
    text = svg.read_text()
    assert 'id="cell-T"' in text
    runner.invoke(cli, ['svg', str(pair_file), '-o', str(svg)])
    assert svg.read_text() == text


def test_bench_single_size(runner):
    result = runner.invoke(cli, ['--log-level', 'ERROR', 'bench', '--sizes', '50'])
    assert result.exit_code == 0, result.output
    assert "runtimeMs" in result.output
    assert "k = " not in result.output


def test_bench_prints_two_worker_speedup(runner):
    result = runner.invoke(cli, ['--log-level', 'ERROR', 'bench', '--sizes', '60', '--speedup'])
    assert result.exit_code == 0, result.output
    header, row = result.output.splitlines()[:2]
    assert header.split()[-2:] == ['parallelMs', 'speedup']
    assert len(row.split()) == 6


def test_bench_rejects_bad_sizes(runner):
    result = runner.invoke(cli, ['bench', '--sizes', '10,x'])
    assert result.exit_code == 2


def test_fit_exponent():
    assert fit_exponent([100], [1.0]) is None
    assert fit_exponent([100, 200, 400], [1.0, 2.0, 4.0]) == pytest.approx(1.0)
    assert fit_exponent([100, 200, 400], [1.0, 4.0, 16.0]) == pytest.approx(2.0)


def test_json_log_format():
    configure_logging('WARNING', 'json')
    try:
        handler = logging.getLogger().handlers[0]
        assert type(handler.formatter).__name__ == 'JsonFormatter'
        assert logging.getLogger().level == logging.WARNING
    finally:
        configure_logging('INFO', 'text')


def svg_cells(text):
    """Bounding box in px and fill of every cell group of a rendered SVG."""
    cells = {}
    for gid, path, fill in SVG_CELL.findall(text):
        nums = [float(v) for v in re.findall(r"-?\d+(?:\.\d+)?", path)]
        xs, ys = nums[0::2], nums[1::2]
        cells[gid] = {"box": [min(xs), min(ys), max(xs), max(ys)], "fill": fill}
    return cells


def test_legalized_pair_matches_golden(runner, tmp_path):
    """Test the legalized file byte for byte and the report key set against the golden copies."""
    out = tmp_path / "out.pl"
    report = tmp_path / "report.json"
    result = runner.invoke(cli, ['--log-level', 'ERROR', 'legalize', str(GOLDEN / "pair.pl"),
                                 '-o', str(out), '--report', str(report)])
    assert result.exit_code == 0, result.output
    assert out.read_bytes() == (GOLDEN / "pair_legal.pl").read_bytes()

    expected = json.loads((GOLDEN / "pair_report.json").read_text())
    doc = json.loads(report.read_text())
    assert sorted(doc) == expected['keys']
    assert sorted(doc['stageTimesMs']) == expected['stageTimesMs']
    for key, value in expected['values'].items():
        assert doc[key] == value, key


def test_legal_input_round_trips_byte_for_byte(runner, tmp_path):
    out = tmp_path / "out.pl"
    result = runner.invoke(cli, ['--log-level', 'ERROR', 'legalize', str(GOLDEN / "legal_mixed.pl"),
                                 '-o', str(out)])
    assert result.exit_code == 0, result.output
    assert out.read_bytes() == (GOLDEN / "legal_mixed.pl").read_bytes()


def test_svg_of_legalized_pair_matches_golden(runner, tmp_path):
    svg = tmp_path / "pair.svg"
    result = runner.invoke(cli, ['svg', str(GOLDEN / "pair_legal.pl"), '-o', str(svg)])
    assert result.exit_code == 0, result.output
    expected = json.loads((GOLDEN / "pair_legal_svg.json").read_text())
    assert svg_cells(svg.read_text()) == expected
