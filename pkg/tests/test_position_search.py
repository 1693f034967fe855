import pytest

from src.features.core.code import site_ratio
from src.features.core.errors import NoFeasiblePoint
from src.features.fop import code as fop_code
from src.features.fop.code import (
    build_displacement_curves,
    enumerate_insertion_points,
    evaluate_point,
    find_optimal_position,
    make_executor,
)
from src.features.fop.oracle import positional_oracle, total_displacement
from src.features.fop.pipeline import fused_forward_backward, six_op, sort_breakpoints


def random_points(rng, make_region, make_target, count):
    """Yield (region, target, point) for ``count`` random insertion points."""
    produced = 0
    while produced < count:
        region = make_region(rng)
        target = make_target(rng, region)
        points = enumerate_insertion_points(region, target)
        if not points:
            continue
        produced += 1
        yield region, target, rng.choice(points)


def test_curve_minimum_matches_oracle(rng, make_region, make_target):
    """Test that the breakpoint minimum equals a brute-force scan of shifted positions."""
    for region, target, ip in random_points(rng, make_region, make_target, 500):
        ratio = site_ratio(region.grid)
        result = evaluate_point(region, target, ip, ratio)
        _, oracle_v = positional_oracle(region, target, ip, step=1.0)
        assert result.v_star == pytest.approx(oracle_v, abs=1e-9)
        assert total_displacement(region, target, ip, result.x_star) == pytest.approx(result.v_star, abs=1e-9)


def test_fused_pipeline_matches_six_op(rng, make_region, make_target):
    """Test that both pipeline forms return identical floats on real curve sets."""
    for region, target, ip in random_points(rng, make_region, make_target, 500):
        curves = build_displacement_curves(region, target, ip)
        expected = six_op(curves.breakpoints, curves.evaluate, ip.x_lo, ip.x_hi)
        got = fused_forward_backward(sort_breakpoints(curves.breakpoints), curves.evaluate, ip.x_lo, ip.x_hi)
        assert got == expected


def test_parallel_search_is_deterministic(rng, make_region, make_target, monkeypatch):
    """Test that worker count and pruning never change the chosen insertion."""
    monkeypatch.setattr(fop_code, "MIN_SHARE", 1)
    pool = make_executor("thread", 4)
    try:
        checked = 0
        while checked < 200:
            region = make_region(rng)
            target = make_target(rng, region)
            try:
                serial = find_optimal_position(region, target, prune=False)
            except NoFeasiblePoint:
                continue
            checked += 1
            for workers in (1, 2, 4):
                result = find_optimal_position(region, target, workers, pool=pool)
                assert result.key == serial.key
                assert result.point == serial.point
    finally:
        pool.shutdown()


def test_process_pool_matches_threads(rng, make_region, make_target, monkeypatch):
    monkeypatch.setattr(fop_code, "MIN_SHARE", 1)
    region = make_region(rng, num_rows=3, num_sites=40, attempts=10)
    target = make_target(rng, region)
    try:
        threaded = find_optimal_position(region, target, 2, executor="thread")
    except NoFeasiblePoint:
        pytest.skip("random region has no room for the target")
    assert find_optimal_position(region, target, 2, executor="process").key == threaded.key


def test_small_searches_stay_in_process(rng, make_region, make_target, mocker):
    """Test that a pool is not touched when each worker would get too few candidates."""
    pool = mocker.Mock()
    region = make_region(rng, num_rows=1, num_sites=12, attempts=2)
    target = make_target(rng, region, max_w=1)
    serial = find_optimal_position(region, target)
    assert find_optimal_position(region, target, 2, pool=pool).key == serial.key
    pool.submit.assert_not_called()
